"""Monte Carlo BER engine and sweeps.

Trials are grouped into fixed-size blocks and block ``b`` draws its payload
bits, channels and unit-variance noise from a generator seeded by
``(master_seed, system_key, b)``. The system key covers the scheme and
receiver size only, so every detector, SNR value and SNR convention sees the
same realizations (noise is scaled, not redrawn). Results therefore depend
only on the spec and seed, not on how many workers ran the blocks.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.stats import beta

from .channel import SNR_CONVENTIONS, complex_normal, derived_rng, sigma_from_snr, stable_key
from .detectors import DETECTORS, detect_indices
from .errors import BudgetError, ConfigError
from .modulation import bits_to_int
from .signalsets import SchemeConfig, build_signal_set

__all__ = [
    "ExperimentSpec",
    "BerRecord",
    "CSV_COLUMNS",
    "run_point",
    "run_sweep",
    "write_csv",
    "read_csv",
    "crossing_snr",
    "block_size_for",
]

CSV_COLUMNS = (
    "scheme", "detector", "K", "n_r", "n_t", "n_rf", "m_rf", "alphabet",
    "snr_db", "snr_convention", "channel_uses", "bit_errors", "ber", "seed",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One curve: a scheme, a detector and an SNR grid or an n_r grid.

    For an n_r sweep set ``nr_grid`` and the fixed ``snr_db``; the ``n_r`` of
    ``config`` is then ignored.
    """

    config: SchemeConfig
    detector: str = "ml"
    snr_grid: tuple = ()
    nr_grid: tuple = ()
    snr_db: float | None = None
    min_bit_errors: int = 200
    max_channel_uses: int = 10**7
    master_seed: int = 0
    snr_convention: str = "aggregate"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        object.__setattr__(self, "nr_grid", tuple(int(n) for n in self.nr_grid))
        if self.detector not in DETECTORS:
            raise ConfigError(f"unknown detector {self.detector!r}; choose from {DETECTORS}")
        if self.snr_convention not in SNR_CONVENTIONS:
            raise ConfigError(f"unknown SNR convention {self.snr_convention!r}")
        if self.min_bit_errors < 1 or self.max_channel_uses < 1:
            raise ConfigError("min_bit_errors and max_channel_uses must be >= 1")
        for grid in (self.snr_grid, self.nr_grid):
            if list(grid) != sorted(grid):
                raise ConfigError("grids must be sorted")
        if self.nr_grid and self.snr_db is None:
            raise ConfigError("an n_r sweep needs a fixed snr_db")
        if self.detector.startswith("alg1") and self.config.scheme == "CM":
            raise ConfigError("sparse detectors need MBM, SM or GSM")

    @property
    def grid(self) -> tuple:
        if self.nr_grid:
            return self.nr_grid
        if self.snr_grid:
            return self.snr_grid
        if self.snr_db is not None:
            return (float(self.snr_db),)
        raise ConfigError("spec has no SNR or n_r grid")

    def point(self, value) -> tuple[SchemeConfig, float]:
        """(config, snr_db) for one grid value."""
        if self.nr_grid:
            return self.config.replace(n_r=int(value)), float(self.snr_db)
        return self.config, float(value)


@dataclass
class BerRecord:
    scheme: str
    detector: str
    K: int
    n_r: int
    n_t: int
    n_rf: int
    m_rf: int
    alphabet: str
    snr_db: float
    snr_convention: str
    channel_uses: int
    bit_errors: int
    ber: float
    seed: int
    bits_per_use: int = 0
    sq_errors: int = 0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def total_bits(self) -> int:
        return self.channel_uses * self.bits_per_use

    def confidence_interval(self, level: float = 0.95) -> tuple[float, float]:
        """Clopper-Pearson interval on an effective bit count.

        Errors cluster within a channel use, so the bit count is deflated by
        the design effect measured from the per-use error counts.
        """
        n, e = self.total_bits, self.bit_errors
        if n == 0:
            return 0.0, 1.0
        deff = 1.0
        if self.channel_uses > 1 and 0 < e < n:
            mean = e / self.channel_uses
            var_use = (self.sq_errors - self.channel_uses * mean**2) / (self.channel_uses - 1)
            p = e / n
            var_binom = self.bits_per_use * p * (1 - p)
            if var_binom > 0:
                deff = max(1.0, var_use / var_binom)
        n_eff = n / deff
        e_eff = e / deff
        a = (1 - level) / 2
        lo = 0.0 if e_eff <= 0 else float(beta.ppf(a, e_eff, n_eff - e_eff + 1))
        hi = 1.0 if e_eff >= n_eff else float(beta.ppf(1 - a, e_eff + 1, n_eff - e_eff))
        return lo, hi

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CSV_COLUMNS}


def block_size_for(config: SchemeConfig) -> int:
    """Trials per seeded block: up to 256, smaller for large channel matrices."""
    per_trial = config.n_r * config.K * config.dim
    return int(np.clip((1 << 19) // per_trial, 1, 256))


def _system_key(config: SchemeConfig) -> int:
    return stable_key(
        config.scheme, config.alphabet.name, config.K, config.n_r, config.n_t,
        config.n_rf, config.m_rf, config.normalize_gsm,
    )


def draw_block(config: SchemeConfig, sset, master_seed: int, block: int, size: int):
    """Payload indices, channels and unit noise for one block of trials."""
    rng = derived_rng(master_seed, _system_key(config), block)
    K, D = config.K, sset.dim
    bits = rng.integers(0, 2, size=(size, K, sset.eta), dtype=np.uint8)
    idx = bits_to_int(bits)
    Hs = complex_normal(rng, (size, config.n_r, K * D))
    w = complex_normal(rng, (size, config.n_r))
    return idx, Hs, w


def _run_block(args):
    config, detector, sigma2, seed, block, size, keep = args
    sset = build_signal_set(config)
    idx, Hs, w = draw_block(config, sset, seed, block, size)
    idx, Hs, w = idx[:keep], Hs[:keep], w[:keep]
    x = sset.vectors[idx].reshape(keep, -1)
    Y = np.einsum("bij,bj->bi", Hs, x) + np.sqrt(sigma2) * w
    hat = detect_indices(detector, Y, Hs, sset, config.K, sigma2)
    table = sset.bit_table
    per_use = np.count_nonzero(table[hat] != table[idx], axis=(1, 2))
    return int(per_use.sum()), int(np.sum(per_use.astype(np.int64) ** 2))


def run_point(spec: ExperimentSpec, grid_value=None) -> BerRecord:
    """Simulate one grid point until ``min_bit_errors`` or ``max_channel_uses``."""
    if grid_value is None:
        grid_value = spec.grid[0]
    config, snr_db = spec.point(grid_value)
    sset = build_signal_set(config)
    sigma2 = sigma_from_snr(snr_db, config, spec.snr_convention).sigma2
    B = block_size_for(config)
    bits_per_use = config.K * sset.eta
    t0 = time.perf_counter()

    uses = errors = sq = 0
    block = 0
    pool = ProcessPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        while errors < spec.min_bit_errors and uses < spec.max_channel_uses:
            wave = []
            planned = uses
            for _ in range(spec.workers):
                keep = min(B, spec.max_channel_uses - planned)
                if keep <= 0:
                    break
                wave.append((config, spec.detector, sigma2, spec.master_seed, block, B, keep))
                planned += keep
                block += 1
            try:
                results = list(pool.map(_run_block, wave) if pool else map(_run_block, wave))
            except BudgetError as exc:
                raise BudgetError(
                    f"{spec.detector} on {config.describe()} K={config.K} n_r={config.n_r}: {exc}"
                ) from exc
            # reduce in block order so the stopping point is schedule independent
            for args, (e, s) in zip(wave, results):
                if errors >= spec.min_bit_errors:
                    break
                uses += args[-1]
                errors += e
                sq += s
    finally:
        if pool:
            pool.shutdown()

    return BerRecord(
        scheme=config.scheme,
        detector=spec.detector,
        K=config.K,
        n_r=config.n_r,
        n_t=config.n_t,
        n_rf=config.n_rf,
        m_rf=config.m_rf,
        alphabet=config.alphabet.name,
        snr_db=snr_db,
        snr_convention=spec.snr_convention,
        channel_uses=uses,
        bit_errors=errors,
        ber=errors / (uses * bits_per_use) if uses else 0.0,
        seed=spec.master_seed,
        bits_per_use=bits_per_use,
        sq_errors=sq,
        wall_time=time.perf_counter() - t0,
    )


def run_sweep(spec: ExperimentSpec, on_record=None) -> list[BerRecord]:
    """Run every grid point; ``on_record`` is called as each record completes."""
    records = []
    for value in spec.grid:
        rec = run_point(spec, value)
        records.append(rec)
        if on_record is not None:
            on_record(rec)
    return records


def write_csv(records, stream=None, header: bool = True) -> str | None:
    """Write records with the fixed column order; returns text if no stream given."""
    own = stream is None
    out = io.StringIO() if own else stream
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
    if header:
        writer.writeheader()
    for rec in records:
        writer.writerow(rec.row())
    return out.getvalue() if own else None


def read_csv(stream) -> list[dict]:
    return list(csv.DictReader(stream))


def crossing_snr(snr_db, values, target: float) -> float:
    """SNR where a decreasing curve first drops to ``target``.

    Interpolates linearly in log10(value); a zero-valued point is
    interpolated linearly instead. Returns ``nan`` if the target is never
    reached.
    """
    snr = np.asarray(snr_db, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return float("nan")
    if v[0] <= target:
        return float(snr[0])
    for i in range(1, len(v)):
        if v[i] <= target:
            if v[i] > 0:
                a, b = np.log10(v[i - 1]), np.log10(v[i])
                t = (np.log10(target) - a) / (b - a)
            else:
                t = (v[i - 1] - target) / v[i - 1]
            return float(snr[i - 1] + t * (snr[i] - snr[i - 1]))
    return float("nan")


def spec_with(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    return replace(spec, **changes)
