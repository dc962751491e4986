"""Conventional complex constellations with bit labels.

Every :class:`Alphabet` stores its points indexed by label value: ``points[i]``
carries the label whose natural-binary reading is ``i``. All constellations are
scaled to unit average energy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EncodingError

__all__ = [
    "Alphabet",
    "build_alphabet",
    "parse_alphabet",
    "bits_to_symbol",
    "symbol_to_bits",
    "as_bit_array",
    "bits_to_int",
    "int_to_bits",
]

KINDS = ("BPSK", "QAM", "PSK")
QAM_ORDERS = (2, 4, 8, 16, 32, 64)


def as_bit_array(bits, length: int | None = None) -> np.ndarray:
    """Coerce a bit string or 0/1 sequence to a ``uint8`` array."""
    if isinstance(bits, str):
        if not re.fullmatch(r"[01]*", bits):
            raise EncodingError(f"not a bit string: {bits!r}")
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits)
        if arr.ndim != 1 or (arr.size and not np.isin(arr, (0, 1)).all()):
            raise EncodingError("bits must be a 1-D sequence of 0/1 values")
        arr = arr.astype(np.uint8)
    if length is not None and arr.size != length:
        raise EncodingError(f"expected {length} bits, got {arr.size}")
    return arr


def bits_to_int(bits: np.ndarray) -> np.ndarray | int:
    """MSB-first integer value of the last axis of a bit array."""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    out = bits @ weights
    return int(out) if np.ndim(out) == 0 else out


def int_to_bits(values, n: int) -> np.ndarray:
    """Inverse of :func:`bits_to_int`; appends an axis of length ``n``."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def _gray(n):
    return n ^ (n >> 1)


def _gray_levels(n_bits: int) -> np.ndarray:
    """Amplitude of each Gray label on one PAM rail (label 0 -> most positive)."""
    L = 1 << n_bits
    amp = np.empty(L)
    for pos in range(L):
        amp[_gray(pos)] = (L - 1) - 2 * pos
    return amp


def _rect_qam(i_bits: int, q_bits: int) -> np.ndarray:
    # label = I-rail bits (MSB) followed by Q-rail bits
    i_amp = _gray_levels(i_bits)
    q_amp = _gray_levels(q_bits) if q_bits else np.zeros(1)
    return (i_amp[:, None] + 1j * q_amp[None, :]).ravel()


def _cross32() -> np.ndarray:
    # Start from the 8x4 Gray rectangle and fold the |I| = 7 columns onto the
    # |Q| = 5 rows; neighbours of the folded points are only quasi-Gray.
    pts = _rect_qam(3, 2)
    out = pts.copy()
    for i, p in enumerate(pts):
        re_, im = p.real, p.imag
        if abs(re_) == 7:
            new_re = np.sign(re_) * (3 if abs(im) == 1 else 1)
            out[i] = new_re + 1j * np.sign(im) * 5
    return out


@dataclass(frozen=True, eq=False)
class Alphabet:
    """A labelled unit-energy constellation; ``points[i]`` has label ``i``."""

    kind: str
    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def labels(self) -> list[str]:
        n = self.bits_per_symbol
        return [format(i, f"0{n}b") for i in range(self.order)]

    @property
    def name(self) -> str:
        if self.kind == "BPSK":
            return "bpsk"
        return f"{self.order}{self.kind.lower()}"

    def __len__(self) -> int:
        return self.order

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Alphabet)
            and self.kind == other.kind
            and self.order == other.order
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.order))


def build_alphabet(kind: str, order: int) -> Alphabet:
    """Build a Gray-labelled, unit-average-energy constellation.

    Parameters
    ----------
    kind : {"BPSK", "QAM", "PSK"}
    order : int
        Constellation size. QAM supports 2, 4, 8 (4x2 rectangle), 16,
        32 (cross) and 64; PSK any power of two >= 2.
    """
    kind = kind.upper()
    if kind not in KINDS:
        raise ConfigError(f"unknown alphabet kind {kind!r}")
    if not isinstance(order, (int, np.integer)) or order < 2 or order & (order - 1):
        raise ConfigError(f"alphabet order must be a power of two >= 2, got {order!r}")
    order = int(order)
    n_bits = order.bit_length() - 1

    if kind == "BPSK" or (kind == "QAM" and order == 2):
        if order != 2:
            raise ConfigError("BPSK has order 2")
        pts = np.array([1.0 + 0j, -1.0 + 0j])
    elif kind == "PSK":
        pts = np.empty(order, dtype=complex)
        for pos in range(order):
            pts[_gray(pos)] = np.exp(2j * np.pi * pos / order)
        # exact axis points for small orders
        pts = np.where(np.abs(pts.real) < 1e-15, 1j * pts.imag, pts)
        pts = np.where(np.abs(pts.imag) < 1e-15, pts.real + 0j, pts)
    else:
        if order not in QAM_ORDERS:
            raise ConfigError(f"unsupported QAM order {order}; choose from {QAM_ORDERS}")
        if order == 32:
            pts = _cross32()
        elif n_bits % 2 == 0:
            pts = _rect_qam(n_bits // 2, n_bits // 2)
        else:
            pts = _rect_qam((n_bits + 1) // 2, n_bits // 2)
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))

    pts = np.asarray(pts, dtype=complex)
    pts.setflags(write=False)
    return Alphabet(kind=kind, order=order, points=pts)


_NAME_RE = re.compile(r"^(\d+)?-?(qam|psk)$|^(qam|psk)-?(\d+)$")


def parse_alphabet(name: str | Alphabet) -> Alphabet:
    """Parse names such as ``bpsk``, ``4qam``, ``16-QAM``, ``qam32`` or ``8psk``."""
    if isinstance(name, Alphabet):
        return name
    s = name.strip().lower()
    if s == "bpsk":
        return build_alphabet("BPSK", 2)
    if s == "qpsk":
        return build_alphabet("PSK", 4)
    m = _NAME_RE.match(s)
    if not m or not (m.group(1) or m.group(4)):
        raise ConfigError(f"cannot parse alphabet name {name!r}")
    kind = (m.group(2) or m.group(3)).upper()
    return build_alphabet(kind, int(m.group(1) or m.group(4)))


def bits_to_symbol(alphabet: Alphabet, bits) -> complex:
    """Map a ``log2(order)``-bit label to its constellation point."""
    arr = as_bit_array(bits, alphabet.bits_per_symbol)
    return complex(alphabet.points[bits_to_int(arr)])


def symbol_to_bits(alphabet: Alphabet, symbol: complex) -> str:
    """Label of the constellation point nearest to ``symbol``."""
    idx = int(np.argmin(np.abs(alphabet.points - symbol)))
    return alphabet.labels[idx]
