from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mumbm.analysis import (
    conditional_pep,
    f_alpha,
    pep_from_alpha,
    pep_terms,
    pep_unconditional,
    union_bound_ber,
)
from mumbm.errors import BudgetError, ConfigError
from mumbm.signalsets import SchemeConfig, build_signal_set


def _pep_direct(alpha, n_r):
    # plain-arithmetic form, fine for small n_r
    f = 0.5 * (1 - np.sqrt(alpha / (1 + alpha)))
    return f**n_r * sum(comb(n_r - 1 + i, i) * (1 - f) ** i for i in range(n_r))


def _bound_brute(config, sigma2):
    """Union bound by explicit enumeration of every ordered joint pair."""
    s = build_signal_set(config)
    K, eta = config.K, s.eta
    joint = list(product(range(s.size), repeat=K))
    total = 0.0
    for a in joint:
        xa = np.concatenate([s.vectors[i] for i in a])
        for b in joint:
            if a == b:
                continue
            xb = np.concatenate([s.vectors[i] for i in b])
            ham = sum(bin(i ^ j).count("1") for i, j in zip(a, b))
            total += pep_unconditional(xa, xb, sigma2, config.n_r) * ham / (K * eta)
    return total / len(joint)


def test_pep_terms():
    t = pep_terms([1, 0, 0, 0], [-1, 0, 0, 0], 1.0, "000", "001")
    assert np.array_equal(t.theta, [4, 0, 0, 0])
    assert t.alpha == 1.0 and t.hamming == 1


@pytest.mark.parametrize("n_r", [1, 2, 8, 30])
def test_log_domain_matches_direct(n_r):
    for alpha in (1e-3, 0.1, 1.0, 10.0):
        assert pep_from_alpha(alpha, n_r) == pytest.approx(_pep_direct(alpha, n_r), rel=1e-10)


def test_pep_limits():
    for n_r in (1, 4, 64):
        assert pep_from_alpha(1e-12, n_r) == pytest.approx(0.5, abs=1e-5)
        assert pep_from_alpha(1e12, n_r) < 1e-12
    # no underflow trouble at several hundred antennas
    v = pep_from_alpha(1e-3, 624)
    assert 0 < v < 0.5 and np.isfinite(v)


def test_f_range_and_monotone():
    a = np.logspace(-8, 8, 400)
    f = f_alpha(a)
    assert np.all(f > 0) and np.all(f <= 0.5)
    assert np.all(np.diff(f) < 0)
    assert f_alpha(0.0) == 0.5


@settings(max_examples=30)
@given(st.integers(1, 8), st.integers(1, 64), st.floats(0.01, 10), st.data())
def test_pep_symmetric(dim, n_r, sigma2, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32)))
    x1 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x2 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    assert pep_unconditional(x1, x2, sigma2, n_r) == pep_unconditional(x2, x1, sigma2, n_r)


def test_pep_domain_errors():
    with pytest.raises(ConfigError):
        pep_unconditional([1, 0], [1, 0], 1.0, 2)
    with pytest.raises(ConfigError):
        pep_unconditional([1, 0], [0, 1], 0.0, 2)


def test_pep_vs_monte_carlo_alpha_one():
    # theta = 4 on one coordinate with sigma2 = 1 gives alpha = 1
    x1 = np.array([1, 0, 0, 0], dtype=complex)
    x2 = np.array([-1, 0, 0, 0], dtype=complex)
    n_r, sigma2, draws = 8, 1.0, 10**6
    rng = np.random.default_rng(11)
    mc = 0.0
    for _ in range(10):
        H = (rng.standard_normal((draws // 10, n_r, 4)) + 1j * rng.standard_normal((draws // 10, n_r, 4))) * np.sqrt(0.5)
        mc += conditional_pep(x1, x2, sigma2, H).sum()
    mc /= draws
    closed = pep_unconditional(x1, x2, sigma2, n_r)
    assert closed == pytest.approx(_pep_direct(1.0, 8), rel=1e-12)
    assert abs(mc / closed - 1) < 0.02


def test_degenerate_bound_is_single_pep():
    cfg = SchemeConfig.cm("bpsk", K=1, n_r=1)
    for sigma2 in (0.1, 1.0, 3.0):
        pep = pep_unconditional([1.0], [-1.0], sigma2, 1)
        assert pep == pytest.approx(f_alpha(1.0 / sigma2), rel=1e-12)
        assert union_bound_ber(cfg, sigma2) == pytest.approx(pep, rel=1e-12)


@pytest.mark.parametrize(
    "config",
    [
        SchemeConfig.mbm(1, "bpsk", K=2, n_r=2),
        SchemeConfig.mbm(2, "bpsk", K=2, n_r=3),
        SchemeConfig.cm("16qam", K=1, n_r=2),
        SchemeConfig.sm(2, "4qam", K=2, n_r=4),
        SchemeConfig.gsm(4, 2, "bpsk", K=1, n_r=2),
        SchemeConfig.mbm(1, "bpsk", K=3, n_r=2),
    ],
    ids=lambda c: f"{c.describe()}-K{c.K}",
)
def test_bound_matches_brute_force(config):
    for sigma2 in (0.3, 2.0):
        assert union_bound_ber(config, sigma2) == pytest.approx(_bound_brute(config, sigma2), rel=1e-9)


def test_bound_monotone_in_snr():
    cfg = SchemeConfig.mbm(3, "bpsk", K=2, n_r=8)
    snr = np.linspace(-5, 25, 31)
    b = union_bound_ber(cfg, 2 / 10 ** (snr / 10))
    assert b.shape == snr.shape
    assert np.all(np.diff(b) < 0)


def test_bound_user_relabeling_invariant():
    # permuting users permutes joint indices; the pair sum must not change
    cfg = SchemeConfig.sm(2, "bpsk", K=2, n_r=2)
    s = build_signal_set(cfg)
    joint = list(product(range(s.size), repeat=2))
    sigma2 = 0.5

    def bound(order):
        total = 0.0
        for a in joint:
            for b in joint:
                if a == b:
                    continue
                xa = np.concatenate([s.vectors[a[k]] for k in order])
                xb = np.concatenate([s.vectors[b[k]] for k in order])
                ham = sum(bin(i ^ j).count("1") for i, j in zip(a, b))
                total += pep_unconditional(xa, xb, sigma2, 2) * ham
        return total / (len(joint) * 2 * s.eta)

    assert bound((1, 0)) == pytest.approx(bound((0, 1)), rel=1e-12)
    assert union_bound_ber(cfg, sigma2) == pytest.approx(bound((1, 0)), rel=1e-9)


def test_bound_budget_refusal():
    with pytest.raises(BudgetError):
        union_bound_ber(SchemeConfig.cm("16qam", K=4, n_r=8), 1.0, max_joint=2**12)
    with pytest.raises(ConfigError):
        union_bound_ber(SchemeConfig.cm("bpsk", K=1, n_r=1), 0.0)
