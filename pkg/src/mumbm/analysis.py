"""Union bound on the ML bit error rate over i.i.d. Rayleigh fading.

For a transmitted/decided pair (x1, x2) the channel-averaged pairwise error
probability only depends on alpha = sum_l |x1_l - x2_l|^2 / (4 sigma2):

    PEP = f^n_r * sum_{i<n_r} C(n_r-1+i, i) (1-f)^i,
    f   = (1 - sqrt(alpha / (1 + alpha))) / 2.

Everything is evaluated in the log domain so n_r in the hundreds is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BudgetError, ConfigError
from .signalsets import SchemeConfig, build_signal_set

__all__ = [
    "PepTerms",
    "pep_terms",
    "f_alpha",
    "pep_from_alpha",
    "pep_unconditional",
    "conditional_pep",
    "union_bound_ber",
    "DEFAULT_MAX_JOINT",
]

DEFAULT_MAX_JOINT = 2**16


@dataclass(frozen=True)
class PepTerms:
    theta: np.ndarray
    alpha: float
    hamming: int | None = None


def pep_terms(x1, x2, sigma2: float, bits1=None, bits2=None) -> PepTerms:
    """Per-coordinate distances theta, alpha and (optionally) label Hamming distance."""
    theta = np.abs(np.asarray(x1) - np.asarray(x2)) ** 2
    ham = None
    if bits1 is not None and bits2 is not None:
        ham = int(np.count_nonzero(np.asarray(bits1) != np.asarray(bits2)))
    return PepTerms(theta=theta, alpha=float(theta.sum() / (4.0 * sigma2)), hamming=ham)


def _log_f(alpha):
    # 1 - sqrt(a/(1+a)) rewritten to avoid cancellation at large alpha
    alpha = np.asarray(alpha, dtype=float)
    r = np.sqrt(alpha / (1.0 + alpha))
    return np.log(0.5) - np.log1p(alpha) - np.log1p(r)


def f_alpha(alpha):
    """f(alpha) = (1 - sqrt(alpha/(1+alpha))) / 2, in (0, 1/2]."""
    return np.exp(_log_f(alpha))


def pep_from_alpha(alpha, n_r: int):
    """Rayleigh-averaged PEP for an array of alpha values."""
    if n_r < 1:
        raise ConfigError("n_r must be >= 1")
    alpha = np.asarray(alpha, dtype=float)
    log_f = _log_f(alpha)
    f = np.exp(log_f)
    log_1mf = np.log1p(-f)
    i = np.arange(n_r)
    log_binom = gammaln(n_r + i) - gammaln(i + 1) - gammaln(n_r)
    terms = log_binom + np.multiply.outer(log_1mf, i)
    out = np.exp(n_r * log_f + logsumexp(terms, axis=-1))
    return float(out) if out.ndim == 0 else out


def pep_unconditional(x1, x2, sigma2: float, n_r: int) -> float:
    """Probability that ML picks ``x2`` over transmitted ``x1``, averaged over H."""
    if sigma2 <= 0:
        raise ConfigError("sigma2 must be positive")
    terms = pep_terms(x1, x2, sigma2)
    if terms.alpha == 0.0:
        raise ConfigError("x1 and x2 must differ")
    return pep_from_alpha(terms.alpha, n_r)


def conditional_pep(x1, x2, sigma2: float, H: np.ndarray) -> np.ndarray:
    """Q(||H (x2 - x1)|| / sqrt(2 sigma2)) for one channel or a stack of channels."""
    from scipy.special import ndtr

    d = np.asarray(x2) - np.asarray(x1)
    nrm = np.linalg.norm(np.asarray(H) @ d, axis=-1)
    return ndtr(-nrm / np.sqrt(2.0 * sigma2))


def _distance_profile(config: SchemeConfig, max_joint: int):
    """Histogram of ordered joint pairs by total squared distance.

    Returns ``(distances, hamming_sums, n_joint, eta)`` where ``hamming_sums[i]``
    is the summed label Hamming distance over all ordered pairs x1 != x2 whose
    squared distance equals ``distances[i]``. Distances and Hamming weights
    are additive over users, so the K-user histogram is the K-fold
    convolution of the single-user one.
    """
    sset = build_signal_set(config)
    N, K = sset.size, config.K
    if N**K > max_joint:
        raise BudgetError(
            f"union bound needs {N}^{K} = {N**K} joint vectors, budget is {max_joint}"
        )
    V = sset.vectors
    dist = np.round(np.sum(np.abs(V[:, None, :] - V[None, :, :]) ** 2, axis=-1), 12)
    bits = sset.bit_table
    ham = np.count_nonzero(bits[:, None, :] != bits[None, :, :], axis=-1)

    single: dict[float, list] = {}
    for d, h in zip(dist.ravel(), ham.ravel()):
        entry = single.setdefault(float(d), [0, 0])
        entry[0] += 1
        entry[1] += int(h)

    # key -> [pair count, Hamming sum]; starts with the empty product
    joint = {0.0: [1, 0]}
    for _ in range(K):
        nxt: dict[float, list] = {}
        for da, (ca, ha) in joint.items():
            for db, (cb, hb) in single.items():
                e = nxt.setdefault(round(da + db, 10), [0, 0])
                e[0] += ca * cb
                e[1] += ha * cb + ca * hb
        joint = nxt
    joint.pop(0.0)  # x1 == x2 pairs
    keys = np.array(sorted(joint))
    hsum = np.array([joint[k][1] for k in sorted(joint)], dtype=float)
    return keys, hsum, N**K, K * sset.eta


def union_bound_ber(config: SchemeConfig, sigma2, max_joint: int = DEFAULT_MAX_JOINT):
    """Union upper bound on BER under joint ML detection.

    ``sigma2`` may be a scalar or an array; the result has the same shape.
    The bound is not clipped to 1 at low SNR.
    """
    dists, hsum, n_joint, eta = _distance_profile(config, max_joint)
    sig = np.atleast_1d(np.asarray(sigma2, dtype=float))
    if np.any(sig <= 0):
        raise ConfigError("sigma2 must be positive")
    out = np.empty_like(sig)
    for i, s in enumerate(sig):
        pep = pep_from_alpha(dists / (4.0 * s), config.n_r)
        out[i] = np.dot(pep, hsum) / (n_joint * eta)
    return float(out[0]) if np.ndim(sigma2) == 0 else out.reshape(np.shape(sigma2))
