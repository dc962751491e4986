"""Per-user signal sets for MBM, CM, SM and GSM.

Vectors are stored by label value: ``SignalSet.vectors[i]`` is the transmit
vector whose ``eta``-bit label reads ``i`` in natural binary (MSB first).

Label layouts
-------------
MBM : m_rf mirror-activation-pattern bits, then the symbol bits.
CM  : the symbol bits.
SM  : log2(n_t) antenna-index bits, then the symbol bits.
GSM : floor(log2 C(n_t, n_rf)) pattern bits, then n_rf symbol labels in
      ascending antenna order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConfigError
from .modulation import Alphabet, as_bit_array, bits_to_int, int_to_bits, parse_alphabet

__all__ = [
    "SCHEMES",
    "SchemeConfig",
    "SignalSet",
    "spectral_efficiency",
    "build_signal_set",
    "encode_user",
    "decode_user",
    "stack_users",
]

SCHEMES = ("MBM", "CM", "SM", "GSM")


@dataclass(frozen=True)
class SchemeConfig:
    """Transmission scheme shared by all K users, plus the receiver size."""

    scheme: str
    alphabet: Alphabet
    K: int = 1
    n_r: int = 1
    n_t: int = 1
    n_rf: int = 1
    m_rf: int = 0
    normalize_gsm: bool = True

    def __post_init__(self):
        scheme = str(self.scheme).upper()
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "alphabet", parse_alphabet(self.alphabet))
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        for name in ("K", "n_r", "n_t", "n_rf"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.m_rf < 0:
            raise ConfigError("m_rf must be >= 0")
        if scheme == "MBM":
            if self.n_t != 1 or self.n_rf != 1 or self.m_rf < 1:
                raise ConfigError("MBM needs n_t = n_rf = 1 and m_rf >= 1")
        elif scheme == "CM":
            if self.n_t != 1 or self.n_rf != 1:
                raise ConfigError("CM needs n_t = n_rf = 1")
        elif scheme == "SM":
            if self.n_rf != 1 or self.n_t < 2:
                raise ConfigError("SM needs n_rf = 1 and n_t >= 2")
            if self.n_t & (self.n_t - 1):
                raise ConfigError("SM needs a power-of-two n_t")
        elif not 1 <= self.n_rf < self.n_t:
            raise ConfigError("GSM needs 1 <= n_rf < n_t")

    @classmethod
    def mbm(cls, m_rf, alphabet="bpsk", K=1, n_r=1):
        return cls("MBM", alphabet, K=K, n_r=n_r, m_rf=m_rf)

    @classmethod
    def cm(cls, alphabet, K=1, n_r=1):
        return cls("CM", alphabet, K=K, n_r=n_r)

    @classmethod
    def sm(cls, n_t, alphabet, K=1, n_r=1):
        return cls("SM", alphabet, K=K, n_r=n_r, n_t=n_t)

    @classmethod
    def gsm(cls, n_t, n_rf, alphabet, K=1, n_r=1, normalize=True):
        return cls("GSM", alphabet, K=K, n_r=n_r, n_t=n_t, n_rf=n_rf, normalize_gsm=normalize)

    @property
    def dim(self) -> int:
        """Per-user vector dimension D."""
        if self.scheme == "MBM":
            return 1 << self.m_rf
        if self.scheme == "CM":
            return 1
        return self.n_t

    @property
    def nnz(self) -> int:
        """Nonzero entries in every per-user vector."""
        return self.n_rf if self.scheme == "GSM" else 1

    def replace(self, **changes) -> "SchemeConfig":
        from dataclasses import replace

        return replace(self, **changes)

    def describe(self) -> str:
        a = self.alphabet.name
        if self.scheme == "MBM":
            return f"MBM(m_rf={self.m_rf}, {a})"
        if self.scheme == "CM":
            return f"CM({a})"
        if self.scheme == "SM":
            return f"SM(n_t={self.n_t}, {a})"
        return f"GSM(n_t={self.n_t}, n_rf={self.n_rf}, {a})"


def spectral_efficiency(config: SchemeConfig) -> int:
    """Bits per channel use carried by one user."""
    b = config.alphabet.bits_per_symbol
    if config.scheme == "MBM":
        return config.m_rf + b
    if config.scheme == "CM":
        return b
    if config.scheme == "SM":
        return int(math.log2(config.n_t)) + b
    n_patterns = math.comb(config.n_t, config.n_rf)
    return (n_patterns.bit_length() - 1) + config.n_rf * b


@dataclass(frozen=True, eq=False)
class SignalSet:
    """All per-user transmit vectors of one scheme, indexed by label value."""

    config: SchemeConfig
    vectors: np.ndarray = field(repr=False)
    eta: int

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def nnz(self) -> int:
        return self.config.nnz

    @property
    def labels(self) -> list[str]:
        return [format(i, f"0{self.eta}b") for i in range(self.size)]

    @property
    def bit_table(self) -> np.ndarray:
        """``(size, eta)`` array of label bits."""
        return int_to_bits(np.arange(self.size), self.eta)

    @property
    def energies(self) -> np.ndarray:
        return np.sum(np.abs(self.vectors) ** 2, axis=1)

    def __len__(self) -> int:
        return self.size


def _gsm_patterns(n_t, n_rf):
    combos = list(combinations(range(n_t), n_rf))
    keep = 1 << (len(combos).bit_length() - 1)
    return combos[:keep]


def build_signal_set(config: SchemeConfig) -> SignalSet:
    """Enumerate every per-user transmit vector of ``config``."""
    pts = config.alphabet.points
    Q = len(pts)
    D = config.dim
    eta = spectral_efficiency(config)
    vecs = np.zeros((1 << eta, D), dtype=complex)

    if config.scheme in ("MBM", "SM"):
        for m in range(D):
            vecs[m * Q:(m + 1) * Q, m] = pts
    elif config.scheme == "CM":
        vecs[:, 0] = pts
    else:
        patterns = _gsm_patterns(config.n_t, config.n_rf)
        n_sym = Q ** config.n_rf
        # symbol labels in ascending antenna order, first antenna most significant
        sym_idx = np.array(np.unravel_index(np.arange(n_sym), (Q,) * config.n_rf)).T
        scale = 1 / np.sqrt(config.n_rf) if config.normalize_gsm else 1.0
        for p, pat in enumerate(patterns):
            block = vecs[p * n_sym:(p + 1) * n_sym]
            block[:, list(pat)] = pts[sym_idx] * scale

    vecs.setflags(write=False)
    return SignalSet(config=config, vectors=vecs, eta=eta)


def encode_user(sset: SignalSet, bits) -> np.ndarray:
    """Transmit vector labelled by ``bits`` (length ``eta``)."""
    arr = as_bit_array(bits, sset.eta)
    return sset.vectors[bits_to_int(arr)].copy()


def decode_user(sset: SignalSet, index: int) -> str:
    """Bit label of signal-set member ``index``."""
    return format(int(index), f"0{sset.eta}b")


def stack_users(user_vectors) -> np.ndarray:
    """Concatenate K equal-length per-user vectors in user order."""
    vecs = [np.asarray(v, dtype=complex).ravel() for v in user_vectors]
    if not vecs:
        raise ConfigError("need at least one user vector")
    if len({v.size for v in vecs}) != 1:
        raise ConfigError("user vectors differ in dimension")
    return np.concatenate(vecs)
