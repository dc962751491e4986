"""Multiuser receivers for the stacked model ``y = H x + n``.

Every detector takes the received vector ``y``, the ``n_r x K*D`` channel ``H``,
the per-user :class:`~mumbm.signalsets.SignalSet` and the user count ``K``,
and returns a :class:`DetectionResult` whose per-user blocks are members of
the signal set. Joint candidates are indexed with user 1 as the most
significant digit; every argmin tie goes to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ConfigError
from .recovery import RECOVERY_METHODS, omp_path
from .signalsets import SignalSet

__all__ = [
    "DetectionResult",
    "DETECTORS",
    "ml_detect",
    "ml_detect_batch",
    "sphere_detect",
    "mmse_estimate",
    "mmse_detect",
    "extract_uap",
    "nearest_su_signal",
    "algorithm1",
    "decode_bits",
    "detect",
    "detect_indices",
]

DETECTORS = ("ml", "sphere", "mmse", "alg1-omp", "alg1-cosamp", "alg1-sp")
DEFAULT_ML_BUDGET = 2**24
_CHUNK = 2**14


@dataclass
class DetectionResult:
    x_hat: np.ndarray
    indices: np.ndarray
    bits_hat: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def per_user_indices(self) -> np.ndarray:
        return self.indices


def decode_bits(indices, sset: SignalSet) -> str:
    """Concatenated bit labels of per-user signal-set indices."""
    return "".join(format(int(i), f"0{sset.eta}b") for i in indices)


def _result(indices, sset, **diag) -> DetectionResult:
    indices = np.asarray(indices, dtype=np.int64)
    x_hat = sset.vectors[indices].ravel()
    return DetectionResult(x_hat, indices, decode_bits(indices, sset), diag)


def _check(y, H, sset, K):
    y = np.asarray(y, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[1] != K * sset.dim or y.shape != (H.shape[0],):
        raise ConfigError(
            f"shape mismatch: y {y.shape}, H {H.shape}, expected {K} users of dim {sset.dim}"
        )
    return y, H


def _per_user_images(H, sset, K):
    """``HS[k] = H_k @ V^T``: received image of every member for user k."""
    D = sset.dim
    V = sset.vectors
    return [H[:, k * D:(k + 1) * D] @ V.T for k in range(K)]


def _joint_metrics(y, HS, digits):
    """||y - H x||^2 for joint candidates given by per-user ``digits`` (K, C)."""
    Hx = HS[0][:, digits[0]]
    for k in range(1, len(HS)):
        Hx = Hx + HS[k][:, digits[k]]
    diff = y[:, None] - Hx
    return np.sum(diff.real**2 + diff.imag**2, axis=0)


def ml_detect(y, H, sset: SignalSet, K: int, max_candidates: int = DEFAULT_ML_BUDGET) -> DetectionResult:
    """Exhaustive joint ML: argmin over all ``|S|^K`` candidates of ||y - Hx||^2."""
    y, H = _check(y, H, sset, K)
    N = sset.size
    total = N**K
    if total > max_candidates:
        raise BudgetError(
            f"ML needs {N}^{K} = {total} candidates (budget {max_candidates}); use sphere_detect"
        )
    HS = _per_user_images(H, sset, K)
    best_val, best_idx = np.inf, 0
    for start in range(0, total, _CHUNK):
        j = np.arange(start, min(start + _CHUNK, total))
        digits = np.array(np.unravel_index(j, (N,) * K))
        m = _joint_metrics(y, HS, digits)
        i = int(np.argmin(m))
        if m[i] < best_val:
            best_val, best_idx = m[i], start + i
    idx = np.array(np.unravel_index(best_idx, (N,) * K))
    return _result(idx, sset, metric=float(best_val), candidates=total)


def ml_detect_batch(Y, Hs, sset: SignalSet, K: int, max_candidates: int = DEFAULT_ML_BUDGET) -> np.ndarray:
    """Vectorized :func:`ml_detect` over a batch; returns ``(B, K)`` indices."""
    Y = np.asarray(Y, dtype=complex)
    Hs = np.asarray(Hs, dtype=complex)
    B, n_r = Y.shape
    N, D = sset.size, sset.dim
    total = N**K
    if total > max_candidates:
        raise BudgetError(
            f"ML needs {N}^{K} = {total} candidates (budget {max_candidates}); use sphere_detect"
        )
    V = sset.vectors
    out = np.empty((B, K), dtype=np.int64)
    step = max(1, (2**20) // (total * n_r))
    for b0 in range(0, B, step):
        sl = slice(b0, b0 + step)
        # (b, n_r, N, N, ...) joint received images built by broadcasting
        Hx = np.zeros((Y[sl].shape[0], n_r) + (1,) * K, dtype=complex)
        for k in range(K):
            img = Hs[sl, :, k * D:(k + 1) * D] @ V.T
            shape = [img.shape[0], n_r] + [1] * K
            shape[2 + k] = N
            Hx = Hx + img.reshape(shape)
        diff = Y[sl].reshape((-1, n_r) + (1,) * K) - Hx
        m = np.sum(diff.real**2 + diff.imag**2, axis=1).reshape(diff.shape[0], -1)
        flat = np.argmin(m, axis=1)
        out[sl] = np.array(np.unravel_index(flat, (N,) * K)).T
    return out


def _nearest_indices(blocks, sset):
    """Nearest member for each row of ``blocks`` (shape (K, D))."""
    diff = blocks[:, None, :] - sset.vectors[None, :, :]
    d = np.sum(diff.real**2 + diff.imag**2, axis=-1)
    # treat round-off level differences as ties so the lowest index wins
    return np.argmin(np.round(d, 12), axis=1)


def nearest_su_signal(sub, sset: SignalSet) -> int:
    """Index of the signal-set member closest to ``sub`` in Euclidean distance."""
    sub = np.asarray(sub, dtype=complex)
    if sub.shape != (sset.dim,):
        raise ConfigError(f"expected a length-{sset.dim} vector, got shape {sub.shape}")
    return int(_nearest_indices(sub[None, :], sset)[0])


def mmse_estimate(y, H, sset: SignalSet, K: int, sigma2: float) -> np.ndarray:
    """Linear MMSE estimate with per-entry prior variance ``mean ||s||^2 / D``.

    ``sigma2 = 0`` gives the zero-forcing (least-squares) solution.
    """
    y, H = _check(y, H, sset, K)
    if sigma2 < 0:
        raise ConfigError("sigma2 must be non-negative")
    n_r, n = H.shape
    if sigma2 == 0:
        return np.linalg.lstsq(H, y, rcond=None)[0]
    v = float(np.mean(sset.energies)) / sset.dim
    reg = sigma2 / v
    Hh = H.conj().T
    if n_r >= n:
        return np.linalg.solve(Hh @ H + reg * np.eye(n), Hh @ y)
    # same estimate through the n_r x n_r system
    return Hh @ np.linalg.solve(H @ Hh + reg * np.eye(n_r), y)


def mmse_detect(y, H, sset: SignalSet, K: int, sigma2: float) -> DetectionResult:
    """MMSE estimate followed by per-user nearest signal-set mapping."""
    x_tilde = mmse_estimate(y, H, sset, K, sigma2)
    idx = _nearest_indices(x_tilde.reshape(K, sset.dim), sset)
    return _result(idx, sset, estimate=x_tilde)


def sphere_detect(
    y,
    H,
    sset: SignalSet,
    K: int,
    initial_radius_policy: str = "mmse",
    sigma2: float | None = None,
) -> DetectionResult:
    """Depth-first sphere decoder over users; returns the ML solution.

    Users are ordered by decreasing channel-block norm and each tree level
    enumerates one user's whole signal set (Schnorr-Euchner order). When
    ``H`` lacks full column rank the search runs on ``[H; sqrt(lam) I]`` and
    subtracts ``lam ||x||^2`` with a worst-case energy bound on undecided
    users, which keeps pruning exact.

    ``initial_radius_policy`` is ``"mmse"`` (radius = metric of the mapped
    MMSE solution, using ``sigma2`` or 1.0 when not given) or ``"inf"``.
    """
    y, H = _check(y, H, sset, K)
    n_r = H.shape[0]
    V = sset.vectors
    N, D = V.shape
    KD = K * D
    E = sset.energies
    E_max = float(E.max())
    HS = _per_user_images(H, sset, K)

    strength = np.array([np.linalg.norm(H[:, k * D:(k + 1) * D]) for k in range(K)])
    order = np.argsort(-strength, kind="stable")
    pos_user = order[::-1]  # block position p holds user pos_user[p]; p = K-1 is searched first
    Hp = np.hstack([H[:, u * D:(u + 1) * D] for u in pos_user])

    lam = 0.0
    if n_r >= KD:
        Q, R = np.linalg.qr(Hp)
        diag = np.abs(np.diag(R))
        if diag.min() <= 1e-10 * max(diag.max(), 1e-300):
            lam = 1.0
    else:
        lam = 1.0
    if lam:
        A = np.vstack([Hp, np.sqrt(lam) * np.eye(KD)])
        b = np.concatenate([y, np.zeros(KD)])
        Q, R = np.linalg.qr(A)
    else:
        b = y
    z = Q.conj().T @ b
    const = max(float(np.vdot(b, b).real - np.vdot(z, z).real), 0.0)
    RS = [R[p * D:(p + 1) * D, p * D:(p + 1) * D] @ V.T for p in range(K)]
    adj_E = lam * E

    def joint_digits(pos_idx):
        digits = np.empty(K, dtype=np.int64)
        digits[pos_user] = pos_idx
        return digits

    # incumbent from the policy
    if initial_radius_policy == "mmse":
        start = mmse_detect(y, H, sset, K, 1.0 if sigma2 is None else sigma2).indices
        best = float(_joint_metrics(y, HS, start[:, None])[0])
        finalists = [tuple(start)]
    elif initial_radius_policy == "inf":
        best = np.inf
        finalists = []
    else:
        raise ConfigError(f"unknown radius policy {initial_radius_policy!r}")

    xs = np.zeros(KD, dtype=complex)
    pos_idx = np.zeros(K, dtype=np.int64)
    nodes = 0

    def tol():
        return 1e-9 * max(1.0, best)

    def search(p, pd, energy):
        nonlocal best, nodes, finalists
        rows = slice(p * D, (p + 1) * D)
        c = z[rows] - R[rows, (p + 1) * D:] @ xs[(p + 1) * D:]
        diff = c[:, None] - RS[p]
        cost = np.sum(diff.real**2 + diff.imag**2, axis=0)
        adj = cost - adj_E
        base = pd + const - lam * (energy + p * E_max)
        for i in np.argsort(adj, kind="stable"):
            lb = base + adj[i]
            if lb > best + tol():
                break
            nodes += 1
            pos_idx[p] = i
            if p == 0:
                if lb < best - tol():
                    best = lb
                    finalists = [tuple(joint_digits(pos_idx))]
                else:
                    finalists.append(tuple(joint_digits(pos_idx)))
                    best = min(best, lb)
            else:
                xs[rows] = V[i]
                search(p - 1, pd + cost[i], energy + E[i])
        xs[rows] = 0

    search(K - 1, 0.0, 0.0)

    # settle near-ties with the exact metric used by ml_detect
    cands = np.array(sorted(set(finalists)), dtype=np.int64).T
    m = _joint_metrics(y, HS, cands)
    winner = cands[:, int(np.argmin(m))]
    return _result(winner, sset, metric=float(m.min()), nodes=nodes, regularized=bool(lam))


def extract_uap(x_r, K: int, D: int) -> np.ndarray:
    """User activity pattern: 1 where a user's block has any nonzero entry."""
    x_r = np.asarray(x_r)
    if x_r.shape != (K * D,):
        raise ConfigError(f"expected length {K * D}, got {x_r.shape}")
    return np.any(x_r.reshape(K, D) != 0, axis=1).astype(np.int8)


def algorithm1(
    y,
    H,
    sset: SignalSet,
    K: int,
    sr_kind: str = "sp",
    max_iters: int = 50,
    tol: float = 1e-8,
) -> DetectionResult:
    """Sparsity-exploiting detection with user-activity validation.

    Sparse recovery is run with sparsity ``K*nnz + j`` for j = 0, 1, ... until
    every user's block holds a nonzero, then each block is mapped to its
    nearest signal-set member. If ``j`` reaches ``K*D - K*nnz`` without a
    valid pattern, the last recovery is mapped anyway (``fallback=True``).
    For OMP the recovery at sparsity s+1 extends the one at s, so a single
    greedy path is walked instead of restarting.
    """
    y, H = _check(y, H, sset, K)
    if sset.config.scheme == "CM":
        raise ConfigError("algorithm1 needs a sparse scheme (MBM, SM or GSM)")
    sr_kind = sr_kind.lower()
    if sr_kind not in RECOVERY_METHODS:
        raise ConfigError(f"unknown sparse recovery {sr_kind!r}")
    D = sset.dim
    s0 = K * sset.nnz
    j_max = K * D - s0

    def recoveries():
        if sr_kind == "omp":
            for rec in omp_path(y, H):
                if rec.iterations >= s0:
                    yield rec.iterations - s0, rec
        else:
            fn = RECOVERY_METHODS[sr_kind]
            for j in range(j_max):
                yield j, fn(y, H, s0 + j, max_iters=max_iters, tol=tol)

    rec, j, valid = None, 0, False
    for j, rec in recoveries():
        if j >= j_max:
            break
        if extract_uap(rec.coef, K, D).all():
            valid = True
            break
    idx = _nearest_indices(rec.coef.reshape(K, D), sset)
    return _result(
        idx,
        sset,
        sparsity=s0 + j,
        j=j,
        fallback=not valid,
        residual_norm=rec.residual_norm,
        inner_iterations=rec.iterations,
        rank_deficient=rec.rank_deficient,
    )


def detect(detector: str, y, H, sset: SignalSet, K: int, sigma2: float | None = None) -> DetectionResult:
    """Dispatch on a detector id from :data:`DETECTORS`."""
    if detector == "ml":
        return ml_detect(y, H, sset, K)
    if detector == "sphere":
        return sphere_detect(y, H, sset, K, sigma2=sigma2)
    if detector == "mmse":
        if sigma2 is None:
            raise ConfigError("mmse needs sigma2")
        return mmse_detect(y, H, sset, K, sigma2)
    if detector.startswith("alg1-"):
        return algorithm1(y, H, sset, K, sr_kind=detector[5:])
    raise ConfigError(f"unknown detector {detector!r}; choose from {DETECTORS}")


def detect_indices(detector: str, Y, Hs, sset: SignalSet, K: int, sigma2: float | None = None) -> np.ndarray:
    """Per-user decisions ``(B, K)`` for a batch of independent channel uses."""
    if detector == "ml":
        return ml_detect_batch(Y, Hs, sset, K)
    if detector not in DETECTORS:
        raise ConfigError(f"unknown detector {detector!r}; choose from {DETECTORS}")
    return np.array([detect(detector, y, H, sset, K, sigma2).indices for y, H in zip(Y, Hs)])
