"""Rayleigh channel draws, the uplink signal model, SNR conventions and seeding."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signalsets import SchemeConfig

__all__ = [
    "NoiseModel",
    "SNR_CONVENTIONS",
    "complex_normal",
    "draw_channel",
    "transmit",
    "sigma_from_snr",
    "stable_key",
    "derived_rng",
]

SNR_CONVENTIONS = ("aggregate", "per_user")


@dataclass(frozen=True)
class NoiseModel:
    """Total complex noise variance per receive antenna, n ~ CN(0, sigma2 I)."""

    sigma2: float

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ConfigError(f"sigma2 must be non-negative, got {self.sigma2}")


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    shape = (int(shape),) if np.ndim(shape) == 0 else tuple(shape)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_channel(config: SchemeConfig, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) matrix of shape ``(n_r, K * D)``.

    Column block ``k`` (width D) holds user k's gain vectors, one column per
    mirror activation pattern for MBM or per antenna for SM/GSM.
    """
    return complex_normal(rng, (config.n_r, config.K * config.dim))


def transmit(H: np.ndarray, x: np.ndarray, noise: NoiseModel | float, rng: np.random.Generator) -> np.ndarray:
    """Received vector ``H @ x + n``."""
    H = np.asarray(H)
    x = np.asarray(x)
    if H.ndim != 2 or x.shape != (H.shape[1],):
        raise ConfigError(f"shape mismatch: H {H.shape}, x {x.shape}")
    sigma2 = noise.sigma2 if isinstance(noise, NoiseModel) else float(noise)
    n = complex_normal(rng, H.shape[0])
    return H @ x + np.sqrt(sigma2) * n


def sigma_from_snr(snr_db: float, config: SchemeConfig, convention: str = "aggregate") -> NoiseModel:
    """Noise variance for a target average SNR.

    ``aggregate``: SNR is total received power per antenna over noise, so
    sigma2 = K / 10^(snr/10). ``per_user``: sigma2 = 1 / 10^(snr/10).
    """
    if not np.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite, got {snr_db}")
    lin = 10.0 ** (snr_db / 10.0)
    if convention == "aggregate":
        return NoiseModel(config.K / lin)
    if convention == "per_user":
        return NoiseModel(1.0 / lin)
    raise ConfigError(f"unknown SNR convention {convention!r}; use one of {SNR_CONVENTIONS}")


def stable_key(*parts) -> int:
    """64-bit integer derived from ``repr`` of the parts; stable across runs."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derived_rng(master_seed: int, experiment_key: int, index: int) -> np.random.Generator:
    """Independent generator for block ``index`` of an experiment."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), experiment_key, int(index)])
    return np.random.Generator(np.random.PCG64(ss))
