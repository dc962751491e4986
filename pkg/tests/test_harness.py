import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mumbm.analysis import union_bound_ber
from mumbm.channel import sigma_from_snr
from mumbm.errors import BudgetError, ConfigError
from mumbm.harness import (
    CSV_COLUMNS,
    BerRecord,
    ExperimentSpec,
    block_size_for,
    crossing_snr,
    read_csv,
    run_point,
    run_sweep,
    write_csv,
)
from mumbm.signalsets import SchemeConfig

MBM = SchemeConfig.mbm(3, "bpsk", K=2, n_r=8)
SPARSE = SchemeConfig.mbm(2, "4qam", K=2, n_r=16)


def _strip(rec):
    d = dict(vars(rec))
    d.pop("wall_time")
    return d


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM, detector="zf")
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM, snr_grid=(4, 2))
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM, min_bit_errors=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM, nr_grid=(8, 16))
    with pytest.raises(ConfigError):
        ExperimentSpec(SchemeConfig.cm("4qam", K=2, n_r=4), detector="alg1-sp")
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM, snr_convention="per_antenna")
    with pytest.raises(ConfigError):
        ExperimentSpec(MBM).grid


def test_csv_columns():
    assert CSV_COLUMNS == (
        "scheme", "detector", "K", "n_r", "n_t", "n_rf", "m_rf", "alphabet",
        "snr_db", "snr_convention", "channel_uses", "bit_errors", "ber", "seed",
    )


@pytest.mark.parametrize("detector", ["ml", "sphere", "mmse", "alg1-omp", "alg1-cosamp", "alg1-sp"])
def test_huge_snr_gives_zero_ber(detector):
    # greedy recovery is only reliably exact with n_r well above K*D
    rec = run_point(ExperimentSpec(SPARSE.replace(n_r=64), detector, snr_db=200.0, max_channel_uses=300))
    assert rec.bit_errors == 0 and rec.ber == 0.0 and rec.channel_uses == 300


@pytest.mark.parametrize(
    "config",
    [SchemeConfig.cm("16qam", K=2, n_r=8), SchemeConfig.sm(2, "8qam", K=2, n_r=8), SchemeConfig.gsm(4, 2, "bpsk", K=2, n_r=8)],
    ids=lambda c: c.scheme,
)
def test_huge_snr_other_schemes(config):
    for det in ("ml", "sphere", "mmse"):
        assert run_point(ExperimentSpec(config, det, snr_db=200.0, max_channel_uses=200)).bit_errors == 0


def test_determinism_and_worker_independence():
    spec = ExperimentSpec(MBM, "ml", snr_db=4.0, min_bit_errors=100, max_channel_uses=5000)
    a = run_point(spec)
    b = run_point(spec)
    c = run_point(ExperimentSpec(MBM, "ml", snr_db=4.0, min_bit_errors=100, max_channel_uses=5000, workers=3))
    assert _strip(a) == _strip(b) == _strip(c)
    assert a.bit_errors >= 100


def test_seed_changes_result():
    a = run_point(ExperimentSpec(MBM, "ml", snr_db=2.0, max_channel_uses=2000, min_bit_errors=10**6))
    b = run_point(ExperimentSpec(MBM, "ml", snr_db=2.0, max_channel_uses=2000, min_bit_errors=10**6, master_seed=1))
    assert a.bit_errors != b.bit_errors


def test_ml_and_sphere_identical_errors():
    for snr in (0.0, 6.0):
        kw = dict(snr_db=snr, min_bit_errors=10**6, max_channel_uses=1500)
        a = run_point(ExperimentSpec(MBM, "ml", **kw))
        b = run_point(ExperimentSpec(MBM, "sphere", **kw))
        assert a.bit_errors == b.bit_errors and a.sq_errors == b.sq_errors


def test_record_invariants_and_partial_budget():
    rec = run_point(ExperimentSpec(MBM, "mmse", snr_db=0.0, min_bit_errors=10**9, max_channel_uses=333))
    assert rec.channel_uses == 333
    assert rec.bits_per_use == 8
    assert rec.bit_errors <= rec.total_bits
    assert rec.ber == rec.bit_errors / (333 * 8)
    lo, hi = rec.confidence_interval()
    assert lo <= rec.ber <= hi


def test_sweep_monotone_in_snr():
    spec = ExperimentSpec(MBM, "ml", snr_grid=(0, 4, 8), min_bit_errors=300)
    seen = []
    recs = run_sweep(spec, on_record=seen.append)
    assert seen == recs and [r.snr_db for r in recs] == [0, 4, 8]
    for a, b in zip(recs, recs[1:]):
        # non-increasing within confidence
        assert b.confidence_interval()[0] <= a.confidence_interval()[1]
    assert recs[-1].ber < recs[0].ber


def test_sweep_monotone_in_nr():
    spec = ExperimentSpec(SPARSE, "alg1-sp", nr_grid=(8, 16, 32), snr_db=6.0, min_bit_errors=200, max_channel_uses=20000)
    recs = run_sweep(spec)
    assert [r.n_r for r in recs] == [8, 16, 32]
    for a, b in zip(recs, recs[1:]):
        assert b.confidence_interval()[0] <= a.confidence_interval()[1]


def test_ml_below_union_bound():
    for snr in (2.0, 6.0, 10.0):
        rec = run_point(ExperimentSpec(MBM, "ml", snr_db=snr, min_bit_errors=200, max_channel_uses=40000))
        bound = union_bound_ber(MBM, sigma_from_snr(snr, MBM).sigma2)
        assert rec.confidence_interval()[0] <= bound


def test_budget_refusal_has_context():
    spec = ExperimentSpec(SchemeConfig.cm("16qam", K=8, n_r=8), "ml", snr_db=5.0)
    with pytest.raises(BudgetError, match="CM\\(16qam\\)"):
        run_point(spec)


def test_csv_round_trip():
    recs = run_sweep(ExperimentSpec(MBM, "mmse", snr_grid=(0.0, 3.0), max_channel_uses=100))
    text = write_csv(recs)
    rows = read_csv(io.StringIO(text))
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert [float(r["ber"]) for r in rows] == [r.ber for r in recs]
    assert rows[0]["scheme"] == "MBM" and rows[0]["alphabet"] == "bpsk"


def test_block_size():
    assert block_size_for(MBM) == 256
    assert block_size_for(SchemeConfig.mbm(6, "4qam", K=16, n_r=128)) == 4
    assert block_size_for(SchemeConfig.mbm(9, "bpsk", K=64, n_r=600)) == 1


def test_confidence_interval_edges():
    r = BerRecord("MBM", "ml", 2, 8, 1, 1, 3, "bpsk", 0.0, "aggregate", 100, 0, 0.0, 0, bits_per_use=8)
    lo, hi = r.confidence_interval()
    assert lo == 0.0 and 0 < hi < 0.01
    # clustered errors widen the interval relative to independent bits
    a = BerRecord("MBM", "ml", 2, 8, 1, 1, 3, "bpsk", 0.0, "aggregate", 100, 80, 0.1, 0, bits_per_use=8, sq_errors=80 * 8)
    b = BerRecord("MBM", "ml", 2, 8, 1, 1, 3, "bpsk", 0.0, "aggregate", 100, 80, 0.1, 0, bits_per_use=8, sq_errors=80)
    wa, wb = np.diff(a.confidence_interval()), np.diff(b.confidence_interval())
    assert wa > wb


@given(
    st.lists(st.floats(1e-7, 1.0), min_size=2, max_size=8).map(lambda v: sorted(v, reverse=True)),
    st.floats(1e-6, 0.5),
)
@settings(max_examples=100)
def test_crossing_snr_properties(values, target):
    snr = np.arange(len(values), dtype=float)
    x = crossing_snr(snr, values, target)
    if values[-1] > target:
        assert np.isnan(x)
    else:
        assert snr[0] <= x <= snr[-1]


def test_crossing_snr_exact():
    assert crossing_snr([0, 10], [1e-2, 1e-4], 1e-3) == pytest.approx(5.0)
    assert crossing_snr([0, 10], [1e-2, 0.0], 5e-3) == pytest.approx(5.0)
