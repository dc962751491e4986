"""Greedy complex-valued sparse recovery: OMP, CoSaMP and subspace pursuit.

All three solve ``y ~ Phi @ x`` for an ``s``-sparse complex ``x`` and return a
:class:`Recovery` whose ``coef`` is zero off the support. Correlations are
Hermitian (``Phi^H r``). Least-squares refits use Householder QR (LAPACK gels);
a support submatrix that is numerically rank deficient falls back to the SVD
minimum-norm solution and is flagged in ``rank_deficient``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import ConfigError

__all__ = ["Recovery", "omp", "omp_path", "cosamp", "subspace_pursuit", "RECOVERY_METHODS"]


@dataclass
class Recovery:
    support: np.ndarray
    coef: np.ndarray
    residual: np.ndarray
    iterations: int = 0
    rank_deficient: bool = False
    residual_history: list = field(default_factory=list)

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residual))


_zgels = lapack.get_lapack_funcs("gels", dtype=np.complex128)


def _lstsq(Phi, y, support):
    A = Phi[:, support]
    m, k = A.shape
    if k <= m:
        qr, sol, info = _zgels(A, y)
        d = np.abs(np.diagonal(qr))
        if info == 0 and d.min() > m * np.finfo(float).eps * d.max():
            return sol[:k], False
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    return sol, rank < k


def _check(y, Phi, s, factor=1):
    Phi = np.asarray(Phi)
    y = np.asarray(y)
    if Phi.ndim != 2 or y.shape != (Phi.shape[0],):
        raise ConfigError(f"shape mismatch: Phi {Phi.shape}, y {y.shape}")
    if s < 1 or factor * s > Phi.shape[1]:
        raise ConfigError(f"sparsity {s} invalid for {Phi.shape[1]} columns")
    return y.astype(complex, copy=False), Phi.astype(complex, copy=False)


def omp_path(y, Phi):
    """Yield the OMP state after each selection (support sizes 1, 2, ...).

    The selection rule is ``argmax_j |phi_j^H r| / ||phi_j||^2`` over columns
    not yet selected, ties to the lowest index.
    """
    y, Phi = _check(y, Phi, 1)
    n = Phi.shape[1]
    col_energy = np.sum(np.abs(Phi) ** 2, axis=0)
    col_energy = np.where(col_energy > 0, col_energy, np.inf)
    selected = np.zeros(n, dtype=bool)
    support: list[int] = []
    r = y.copy()
    history = [float(np.linalg.norm(r))]
    deficient = False
    PhiH = Phi.conj().T
    for it in range(1, n + 1):
        score = np.abs(PhiH @ r) / col_energy
        score[selected] = -np.inf
        j0 = int(np.argmax(score))
        selected[j0] = True
        support.append(j0)
        sol, bad = _lstsq(Phi, y, support)
        deficient |= bad
        r = y - Phi[:, support] @ sol
        history.append(float(np.linalg.norm(r)))
        coef = np.zeros(n, dtype=complex)
        coef[support] = sol
        yield Recovery(np.array(support), coef, r, it, deficient, list(history))


def omp(y, Phi, s: int) -> Recovery:
    """Orthogonal matching pursuit with exactly ``s`` greedy selections."""
    _check(y, Phi, s)
    for rec in omp_path(y, Phi):
        if rec.iterations == s:
            return rec
    raise AssertionError("unreachable")


def _pursuit(y, Phi, s, n_new, max_iters, tol, refit):
    n = Phi.shape[1]
    PhiH = Phi.conj().T
    deficient = False

    def estimate(candidates):
        nonlocal deficient
        sol, bad = _lstsq(Phi, y, candidates)
        deficient |= bad
        keep = np.argsort(-np.abs(sol), kind="stable")[:s]
        support = np.sort(candidates[keep])
        if len(candidates) <= s:
            # nothing pruned, the fit is already on the final support
            vals = sol[keep][np.argsort(candidates[keep], kind="stable")]
        elif refit:
            vals, bad = _lstsq(Phi, y, support)
            deficient |= bad
        else:
            vals = sol[keep][np.argsort(candidates[keep], kind="stable")]
        coef = np.zeros(n, dtype=complex)
        coef[support] = vals
        return support, coef, y - Phi @ coef

    def top(v, k):
        return np.argsort(-np.abs(v), kind="stable")[:k]

    # first iterate: empty support, so the merge is just the top correlations
    support, coef, r = estimate(np.sort(top(PhiH @ y, n_new)))
    history = [float(np.linalg.norm(y)), float(np.linalg.norm(r))]
    it = 1
    while it < max_iters:
        corr = PhiH @ r
        cand = np.union1d(support, top(corr, n_new))
        new_support, new_coef, new_r = estimate(cand)
        it += 1
        new_norm = float(np.linalg.norm(new_r))
        if new_norm >= history[-1] * (1.0 - tol):
            break
        support, coef, r = new_support, new_coef, new_r
        history.append(new_norm)
    return Recovery(support, coef, r, it, deficient, history)


def cosamp(y, Phi, s: int, max_iters: int = 50, tol: float = 1e-8) -> Recovery:
    """Compressive sampling matching pursuit.

    Each iteration merges the current support with the ``2s`` largest
    residual correlations, solves least squares on the merged set and keeps
    the ``s`` largest coefficients. An iterate is only accepted if it lowers
    the residual norm by more than ``tol`` relatively. When ``3s`` exceeds
    the column count the merge simply takes every available column.
    """
    y, Phi = _check(y, Phi, s)
    return _pursuit(y, Phi, s, 2 * s, max_iters, tol, refit=False)


def subspace_pursuit(y, Phi, s: int, max_iters: int = 50, tol: float = 1e-8) -> Recovery:
    """Subspace pursuit: like CoSaMP with ``s`` new candidates and a refit on the pruned support."""
    y, Phi = _check(y, Phi, s, factor=1)
    return _pursuit(y, Phi, s, s, max_iters, tol, refit=True)


RECOVERY_METHODS = {"omp": omp, "cosamp": cosamp, "sp": subspace_pursuit}
