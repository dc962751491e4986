import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mumbm.errors import ConfigError
from mumbm.recovery import cosamp, omp, omp_path, subspace_pursuit

SOLVERS = [omp, cosamp, subspace_pursuit]


def _orthonormal(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    q, _ = np.linalg.qr(A)
    return q


def _instance(rng, n=64, m=256, s=8, noise=0.0):
    Phi = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
    x = np.zeros(m, dtype=complex)
    supp = rng.choice(m, s, replace=False)
    x[supp] = rng.choice([-1.0, 1.0], s)
    y = Phi @ x + noise * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return Phi, x, y, np.sort(supp)


@pytest.mark.parametrize("solver", SOLVERS)
def test_orthonormal_single_atom(solver):
    Phi = _orthonormal(32, 16, 0)
    x = np.zeros(16, dtype=complex)
    x[7] = 0.3 - 1.2j
    rec = solver(Phi @ x, Phi, 1)
    assert rec.support.tolist() == [7]
    assert np.allclose(rec.coef, x, atol=1e-12)
    assert rec.residual_norm < 1e-12
    assert not rec.rank_deficient


@pytest.mark.parametrize("solver", SOLVERS)
def test_noiseless_recovery_small(solver):
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(50):
        Phi, x, y, supp = _instance(rng)
        rec = solver(y, Phi, 8)
        hits += np.array_equal(np.sort(rec.support), supp)
    assert hits >= 49


def test_omp_selection_rule_uses_column_norm():
    # column 1 has a larger raw correlation but a smaller normalised one
    Phi = np.array([[1.0, 2.0], [0.0, 2.0]], dtype=complex)
    y = np.array([1.0, 0.0 + 0.9], dtype=complex)
    scores = np.abs(Phi.conj().T @ y) / np.sum(np.abs(Phi) ** 2, axis=0)
    assert np.abs(Phi.conj().T @ y)[1] > np.abs(Phi.conj().T @ y)[0]
    assert omp(y, Phi, 1).support.tolist() == [int(np.argmax(scores))] == [0]


def test_omp_ties_to_lowest_index():
    Phi = np.eye(4, dtype=complex)
    rec = omp(np.ones(4, dtype=complex), Phi, 2)
    assert rec.support.tolist() == [0, 1]


def test_omp_path_is_incremental():
    rng = np.random.default_rng(6)
    Phi, x, y, _ = _instance(rng, noise=0.1)
    path = list(step for _, step in zip(range(10), omp_path(y, Phi)))
    for k in range(1, 10):
        assert path[k].support[:k].tolist() == path[k - 1].support.tolist()
    assert np.array_equal(omp(y, Phi, 6).support, path[5].support)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0.0, 1.0))
def test_residual_and_sparsity_properties(seed, s, noise):
    rng = np.random.default_rng(seed)
    Phi, x, y, _ = _instance(rng, n=40, m=120, s=6, noise=noise)
    for solver in SOLVERS:
        rec = solver(y, Phi, s)
        assert len(rec.support) <= s
        assert np.count_nonzero(rec.coef) <= s
        assert np.all(rec.coef[np.setdiff1d(np.arange(120), rec.support)] == 0)
        assert np.allclose(rec.residual, y - Phi @ rec.coef)
        h = np.array(rec.residual_history)
        # projections never increase the residual; pursuits accept only improvements
        assert np.all(np.diff(h) <= 1e-9 * h[0])
        assert rec.residual_norm <= h[1] + 1e-9


def test_rank_deficient_support_flagged():
    Phi = np.array([[1, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    y = np.array([2, 0, 0], dtype=complex)
    rec = omp(y, Phi, 2)
    assert rec.rank_deficient
    assert np.allclose(Phi @ rec.coef, y)
    # minimum-norm split across the duplicate columns
    assert np.allclose(rec.coef[:2], [1, 1])


def test_pre_conditions():
    Phi = np.eye(4, dtype=complex)
    with pytest.raises(ConfigError):
        omp(np.ones(4), Phi, 0)
    with pytest.raises(ConfigError):
        omp(np.ones(4), Phi, 5)
    with pytest.raises(ConfigError):
        subspace_pursuit(np.ones(3), Phi, 1)


def test_pursuits_stop_within_cap():
    rng = np.random.default_rng(8)
    Phi, x, y, _ = _instance(rng, noise=0.5)
    for solver in (cosamp, subspace_pursuit):
        rec = solver(y, Phi, 8, max_iters=3)
        assert rec.iterations <= 3
