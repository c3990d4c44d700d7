import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strictbounds import discrepancy, synthetic
from strictbounds.data import ObservationSet
from strictbounds.discrepancy import BracketConfig, estimate_arrays, gaussian_loglik, maximize_delta2_arrays
from strictbounds.errors import DomainError, EstimationError
from strictbounds.fleet import PredictionTable
from strictbounds.grid import MatchedGrid, SpaceTimePoint

from conftest import small_spec

LOG_2PI = np.log(2 * np.pi)


def one_cell(resid, var_emu=0.0, meas=0.0):
    cell = SpaceTimePoint(0.0, 0.0, 0)
    grid = MatchedGrid.identity([cell])
    table = PredictionTable((cell,), np.zeros((1, 1)), np.array([[resid]]), np.array([[var_emu]]))
    return table, ObservationSet(grid, np.array([0.0]), np.array([meas])), grid


def test_loglik_examples():
    assert gaussian_loglik(np.zeros(7), np.ones(7), 0.0) == pytest.approx(-7 * 0.5 * LOG_2PI)
    table, obs, grid = one_cell(1.0)
    assert discrepancy.log_likelihood(0, 1.0, table, obs, grid) == pytest.approx(-0.5 * LOG_2PI - 0.5)
    with pytest.raises(DomainError):
        discrepancy.log_likelihood(0, 0.0, table, obs, grid)
    with pytest.raises(DomainError):
        discrepancy.log_likelihood(0, -1.0, table, obs, grid)


def test_loglik_decreases_for_large_delta2():
    r = np.array([0.3, -0.2, 0.5])
    vals = [gaussian_loglik(r, np.full(3, 0.01), d) for d in (1.0, 10.0, 100.0, 1e4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 200))
def test_closed_form_mle(seed, m):
    r = np.random.default_rng(seed).normal(0, 0.3, m)
    d, ll = maximize_delta2_arrays(r, np.zeros(m))
    assert d == pytest.approx(np.mean(r * r), rel=1e-6)


def test_zero_residuals_give_zero():
    assert maximize_delta2_arrays(np.zeros(5), np.full(5, 0.1))[0] == 0.0
    # zero residuals and zero base variance: the likelihood is unbounded at 0
    with pytest.raises(DomainError):
        maximize_delta2_arrays(np.zeros(5), np.zeros(5))


def test_boundary_optimum_at_zero():
    r = np.array([0.01, -0.01, 0.02])
    d, ll = maximize_delta2_arrays(r, np.full(3, 1.0))
    assert d == 0.0 and ll == gaussian_loglik(r, np.full(3, 1.0), 0.0)


def test_brent_matches_grid_search():
    rng = np.random.default_rng(8)
    base = rng.uniform(0.001, 0.01, 300)
    r = rng.normal(0, np.sqrt(base + 0.02))
    d, ll = maximize_delta2_arrays(r, base)
    upper = 10 * np.mean(r * r)
    grid = np.linspace(0, upper, 100_001)
    vals = np.array([gaussian_loglik(r, base, g) for g in grid])
    g_best = grid[np.argmax(vals)]
    assert ll >= vals.max() - 1e-6 * abs(vals.max())
    assert abs(d - g_best) <= grid[1] - grid[0]


def test_bracket_expands_once():
    # base variance tiny, huge spread: optimum beyond a deliberately small bracket
    r = np.array([1.0, -1.0, 2.0, -2.0])
    d, _ = maximize_delta2_arrays(r, np.zeros(4), BracketConfig(upper_factor=0.5))
    assert d == pytest.approx(np.mean(r * r), rel=1e-6)


def test_estimate_invariants_and_ties():
    rng = np.random.default_rng(1)
    r = rng.normal(0, 0.1, (50, 6))
    r[:, 4] = r[:, 1]  # duplicate column: tie goes to the smaller index
    base = np.full((50, 6), 0.001)
    est = estimate_arrays(r, base)
    assert est.loglik == np.max(est.per_k_loglik)
    assert est.delta2 == est.per_k_delta2[est.best_k]
    assert est.delta2 >= 0
    if est.best_k in (1, 4):
        assert est.best_k == 1


def test_single_test_vector():
    r = np.random.default_rng(2).normal(0, 0.1, (40, 1))
    base = np.full((40, 1), 0.002)
    est = estimate_arrays(r, base)
    assert (est.delta2, est.loglik) == maximize_delta2_arrays(r[:, 0], base[:, 0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    r = rng.normal(0, 0.1, (30, 5))
    base = rng.uniform(0.001, 0.01, (30, 5))
    perm = rng.permutation(5)
    a, b = estimate_arrays(r, base), estimate_arrays(r[:, perm], base[:, perm])
    assert perm[b.best_k] == a.best_k
    assert a.delta2 == b.delta2 and a.loglik == b.loglik


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.floats(0.0, 0.05))
def test_more_measurement_variance_lowers_estimate(seed, extra):
    rng = np.random.default_rng(seed)
    r = rng.normal(0, 0.2, 100)
    base = rng.uniform(0.001, 0.01, 100)
    d0, _ = maximize_delta2_arrays(r, base)
    d1, _ = maximize_delta2_arrays(r, base + extra)
    assert d1 <= d0 + 1e-8


def test_all_fail_raises():
    with pytest.raises(EstimationError):
        estimate_arrays(np.zeros((3, 0)), np.zeros((3, 0)))


def test_estimate_on_synthetic_and_files(tmp_path):
    spec = small_spec(cells=200, delta2=0.01, meas_var=0.002, amplitude=0.03)
    _, obs, truth = synthetic.generate(spec)
    tests = np.vstack([synthetic.sample_test_parameters(spec.space, 100, seed=1), truth.u_star])
    table = synthetic.oracle_table(spec, tests)
    est = discrepancy.estimate(table, obs, obs.grid)
    assert 0.005 < est.delta2 < 0.02
    discrepancy.write_estimate(est, tmp_path / "d.json", tmp_path / "d.csv", {"config_hash": "x"})
    back = discrepancy.read_estimate(tmp_path / "d.json")
    assert back["delta2"] == est.delta2 and back["best_k"] == est.best_k and back["config_hash"] == "x"
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 102
