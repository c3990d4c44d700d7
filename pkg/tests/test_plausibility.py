import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from strictbounds import plausibility, synthetic
from strictbounds.data import ObservationSet
from strictbounds.errors import DomainError
from strictbounds.fleet import PredictionTable
from strictbounds.grid import MatchedGrid, SpaceTimePoint
from strictbounds.plausibility import critical_value, implausibility_arrays

from conftest import small_spec


def test_statistic_examples():
    m = 9
    assert implausibility_arrays(np.ones((m, 1)), np.zeros((m, 1)), np.zeros(m), 1.0)[0] == pytest.approx(3.0)
    assert implausibility_arrays(np.array([[3.0]]), np.array([[4.0]]), np.array([5.0]), 0.0)[0] == 1.0
    assert implausibility_arrays(np.zeros((4, 1)), np.ones((4, 1)), np.ones(4), 0.0)[0] == 0.0
    with pytest.raises(DomainError):
        implausibility_arrays(np.ones((2, 1)), np.zeros((2, 1)), np.zeros(2), 0.0)
    with pytest.raises(DomainError):
        implausibility_arrays(np.empty((0, 1)), np.empty((0, 1)), np.empty(0), 0.1)


def test_critical_values():
    assert critical_value(1, 0.05) == pytest.approx(1.959964, abs=1e-6)
    assert critical_value(100, 0.05) == pytest.approx(np.sqrt(124.342), abs=1e-4)
    assert critical_value(100, 0.05) == pytest.approx(11.151, abs=5e-4)
    towards_one = [critical_value(1, lv) for lv in (0.5, 0.9, 0.999, 1 - 1e-9)]
    assert all(a > b for a, b in zip(towards_one, towards_one[1:])) and towards_one[-1] < 1e-8
    with pytest.raises(DomainError):
        critical_value(0, 0.05)
    with pytest.raises(DomainError):
        critical_value(3, 1.0)


@settings(max_examples=50)
@given(st.integers(1, 2000), st.floats(0.001, 0.5))
def test_critical_is_sqrt_chi2_quantile(df, level):
    c = critical_value(df, level)
    assert stats.chi2.cdf(c * c, df) == pytest.approx(1 - level, rel=1e-9)


@settings(max_examples=40)
@given(st.integers(0, 1000), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_delta2(seed, a, b):
    lo, hi = sorted([a, b])
    rng = np.random.default_rng(seed)
    r = rng.normal(size=(20, 1))
    v = rng.uniform(0.1, 1, (20, 1))
    mv = rng.uniform(0.1, 1, 20)
    assert implausibility_arrays(r, v, mv, hi)[0] <= implausibility_arrays(r, v, mv, lo)[0]


def data(seed=0, m=40, k=30):
    rng = np.random.default_rng(seed)
    return rng.normal(0, 1.2, (m, k)), rng.uniform(0, 0.2, (m, k)), rng.uniform(0.5, 1, m)


@settings(max_examples=30)
@given(st.integers(0, 500), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_rejections_monotone_in_level(seed, a, b):
    lo, hi = sorted([a, b])
    r, v, mv = data(seed)
    rej_lo = {o.k for o in plausibility.test_arrays(r, v, mv, 0.1, lo) if o.reject}
    rej_hi = {o.k for o in plausibility.test_arrays(r, v, mv, 0.1, hi) if o.reject}
    assert rej_lo <= rej_hi


def test_outcome_invariants():
    r, v, mv = data()
    out = plausibility.test_arrays(r, v, mv, 0.05)
    for o in out:
        assert o.reject == (o.statistic > o.critical)
        assert o.df == 40 and o.level == 0.05
        assert o.critical == critical_value(40, 0.05)


def test_all_plausible():
    r, v, mv = data()
    out = plausibility.test_arrays(r * 1e-3, v, mv, 0.05)
    assert not any(o.reject for o in out)


def test_fsum_order_and_value():
    r = np.array([[1e8], [1.0], [-1e8], [1.0]])
    v = np.zeros((4, 1))
    got = implausibility_arrays(r, v, np.ones(4), 0.0)[0]
    assert got == pytest.approx(np.sqrt(2e16 + 2), rel=1e-15)


def test_null_ks_distance():
    # exact model, data drawn from the generative Gaussian law at u*
    m, reps = 200, 1000
    rng = np.random.default_rng(21)
    mv = rng.uniform(0.0005, 0.0015, m)
    sd = np.sqrt(mv + 0.0005)
    r = sd[:, None] * rng.standard_normal((m, reps))
    stat = implausibility_arrays(r, np.zeros((m, reps)), mv, 0.0005)
    ks = stats.kstest(stat**2, stats.chi2(m).cdf).statistic
    assert ks < 0.05


def test_test_all_on_table(tmp_path):
    spec = small_spec(cells=50)
    _, obs, truth = synthetic.generate(spec)
    tests = np.vstack([truth.u_star, synthetic.sample_test_parameters(spec.space, 20, seed=3)])
    table = synthetic.oracle_table(spec, tests)
    out = plausibility.test_all(table, obs, obs.grid, spec.delta2)
    assert len(out) == 21 and all(o.df == 50 for o in out)
    assert out[0].statistic == pytest.approx(plausibility.implausibility(0, table, obs, obs.grid, spec.delta2))
    plausibility.write_outcomes(out, tmp_path / "o.csv", {"mode": "x"})
    back = plausibility.read_outcomes(tmp_path / "o.csv")
    assert [(o.k, o.statistic, o.critical, o.reject) for o in back] == [
        (o.k, o.statistic, o.critical, o.reject) for o in out
    ]
