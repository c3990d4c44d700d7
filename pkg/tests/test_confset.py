import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strictbounds import confset
from strictbounds.plausibility import TestOutcome


def outcomes_from(stat, critical, level=0.05):
    return [TestOutcome(k, float(s), critical, bool(s > critical), 10, level) for k, s in enumerate(stat)]


def linear_problem(seed=0, k=400):
    """Statistic rises linearly with the first coordinate."""
    rng = np.random.default_rng(seed)
    tests = rng.uniform(size=(k, 3))
    stat = 4.0 * tests[:, 0] + 0.5 * tests[:, 1]
    return tests, stat


def test_invert_basic():
    tests, stat = linear_problem()
    out = outcomes_from(stat, 2.0)
    cs = confset.invert(out, tests, "hash")
    assert len(cs) == sum(not o.reject for o in out)
    assert np.array_equal(cs.retained, tests[cs.indices])
    assert all(not out[k].reject for k in cs.indices)
    assert cs.provenance == "hash" and cs.n_tested == len(tests)
    assert confset.invert(outcomes_from(stat, -1.0), tests).is_empty
    assert len(confset.invert(outcomes_from(stat, 100.0), tests)) == len(tests)
    with pytest.raises(ValueError):
        confset.invert(out[:-1], tests)


@settings(max_examples=40)
@given(st.floats(0, 5), st.floats(0, 5))
def test_retention_monotone_in_critical(a, b):
    lo, hi = sorted([a, b])
    tests, stat = linear_problem()
    small = set(confset.invert(outcomes_from(stat, lo), tests).indices)
    large = set(confset.invert(outcomes_from(stat, hi), tests).indices)
    assert small <= large


def test_1d_constraint_flags():
    tests, stat = linear_problem()
    out = outcomes_from(stat, 2.0)
    p0 = confset.project_1d(tests, out, 0, bins=10, bounds=(0, 1))
    assert p0.constrained and p0.ruled_out_bins[-1]
    assert np.all(np.diff(p0.values) >= 0) and p0.critical == 2.0
    p2 = confset.project_1d(tests, out, 2, bins=10, bounds=(0, 1))
    assert not p2.constrained


def brute_force_2d(tests, out, i, j, bins, bounds):
    ei = np.linspace(*bounds[0], bins + 1)
    ej = np.linspace(*bounds[1], bins + 1)
    tested = np.zeros((bins, bins), int)
    kept = np.zeros((bins, bins), int)
    for u, o in zip(tests, out):
        a = min(int(np.searchsorted(ei, u[i], side="right")) - 1, bins - 1)
        b = min(int(np.searchsorted(ej, u[j], side="right")) - 1, bins - 1)
        tested[a, b] += 1
        kept[a, b] += not o.reject
    return tested, kept


@pytest.mark.parametrize("bins", [1, 3, 7, 20])
def test_2d_counts_match_brute_force(bins):
    tests, stat = linear_problem(seed=bins)
    out = outcomes_from(stat, 2.2)
    bounds = ((0.0, 1.0), (0.0, 1.0))
    pr = confset.project_2d(tests, out, (0, 1), bins, bounds)
    tested, kept = brute_force_2d(tests, out, 0, 1, bins, bounds)
    assert np.array_equal(pr.tested, tested) and np.array_equal(pr.retained, kept)
    prop = pr.proportion
    assert np.all(np.isnan(prop[tested == 0]))
    assert np.all((prop[tested > 0] >= 0) & (prop[tested > 0] <= 1))
    if bins == 1:
        assert prop[0, 0] == pytest.approx(np.mean([not o.reject for o in out]))


def test_2d_sums_to_1d():
    tests, stat = linear_problem(seed=4)
    out = outcomes_from(stat, 2.0)
    p2 = confset.project_2d(tests, out, (0, 2), 8, ((0, 1), (0, 1)))
    p1 = confset.project_1d(tests, out, 0, 8, (0, 1))
    assert np.array_equal(p2.tested.sum(axis=1), p1.tested)
    assert np.array_equal(p2.retained.sum(axis=1), p1.retained)


def test_empty_bins_written_as_sentinel(tmp_path):
    tests = np.array([[0.1, 0.1], [0.15, 0.12]])
    out = outcomes_from([0.0, 5.0], 1.0)
    pr = confset.project_2d(tests, out, (0, 1), 2, ((0, 1), (0, 1)))
    confset.write_projection_2d(pr, tmp_path / "p.csv", ("a", "b"))
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "a_lo,a_hi,b_lo,b_hi,tested,retained,proportion"
    assert rows[1].endswith(",2,1,0.5")
    assert sum(r.endswith("empty") for r in rows[1:]) == 3


def test_files_round_trip(tmp_path):
    tests, stat = linear_problem()
    out = outcomes_from(stat, 2.0)
    cs = confset.invert(out, tests)
    confset.write_confidence_set(cs, tmp_path / "cs.csv", ["a", "b", "c"])
    names, idx, vals = confset.read_confidence_set(tmp_path / "cs.csv")
    assert names == ["a", "b", "c"]
    assert np.array_equal(idx, cs.indices) and np.array_equal(vals, cs.retained)
    confset.write_projection_1d(confset.project_1d(tests, out, 0), tmp_path / "p1.csv", "a")
    assert (tmp_path / "p1.csv").read_text().startswith("a,statistic,reject,critical\n")


def test_inversion_is_pure():
    tests, stat = linear_problem()
    out = outcomes_from(stat, 2.0)
    a, b = confset.invert(out, tests), confset.invert(out, tests)
    assert np.array_equal(a.indices, b.indices)
