import filecmp
import os

import numpy as np
import pytest

from strictbounds import fleet, gp, synthetic
from strictbounds.data import TrainingSet
from strictbounds.grid import MatchedGrid

from conftest import small_spec


@pytest.fixture(scope="module")
def eight_cells():
    train, _, _ = synthetic.generate(small_spec(cells=8, n_members=25))
    return train


@pytest.fixture(scope="module")
def fitted(eight_cells):
    return fleet.train_fleet(eight_cells, gp.FitConfig(restarts=2), seed=5)


def dir_equal(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(dir_equal(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def test_cell_seed_stable():
    c = small_spec(cells=2).cells[0]
    assert fleet.cell_seed(1, c) == fleet.cell_seed(1, c)
    assert fleet.cell_seed(1, c) != fleet.cell_seed(2, c)


def test_one_emulator_per_cell(eight_cells, fitted):
    assert list(fitted.emulators) == eight_cells.grid.sim_points
    assert not fitted.failed


def test_singleton_fleet_matches_direct_fit(eight_cells):
    cell = eight_cells.grid.sim_points[3]
    one = TrainingSet(eight_cells.space, MatchedGrid.identity([cell]), eight_cells.inputs, eight_cells.outputs[:, [3]])
    f = fleet.train_fleet(one, gp.FitConfig(restarts=2), seed=5)
    cfg = gp.FitConfig(restarts=2, seed=fleet.cell_seed(5, cell), param_ranges=tuple(one.space.ranges))
    direct = gp.fit(one.inputs, one.outputs[:, 0], cfg)
    assert f.emulators[cell].hyper == direct.hyper


def test_worker_count_does_not_change_bytes(eight_cells, fitted, tmp_path):
    parallel = fleet.train_fleet(eight_cells, gp.FitConfig(restarts=2), seed=5, workers=8)
    fleet.save_fleet(fitted, tmp_path / "w1")
    fleet.save_fleet(parallel, tmp_path / "w8")
    assert dir_equal(tmp_path / "w1", tmp_path / "w8")


def test_predictions_match_one_at_a_time(fitted, rng):
    tests = rng.uniform(size=(7, 3))
    table = fleet.predict_fleet(fitted, tests)
    for i, emu in enumerate(fitted.emulators.values()):
        for k, u in enumerate(tests):
            m, v = gp.predict(emu, u)
            assert table.mean[i, k] == pytest.approx(m, rel=1e-12, abs=1e-15)
            assert table.var[i, k] == pytest.approx(v, rel=1e-12, abs=1e-15)
    par = fleet.predict_fleet(fitted, tests, workers=3)
    assert np.array_equal(par.mean, table.mean) and np.array_equal(par.var, table.var)
    assert np.all(np.isfinite(table.mean)) and np.all(table.var >= 0)


def test_training_inputs_reproduce_outputs(eight_cells, fitted):
    table = fleet.predict_fleet(fitted, eight_cells.inputs)
    # fitted nuggets are tiny relative to the response scale
    assert np.allclose(table.mean, eight_cells.outputs.T, atol=1e-3)


def test_fleet_round_trip(fitted, tmp_path, rng):
    fleet.save_fleet(fitted, tmp_path / "f")
    back = fleet.load_fleet(tmp_path / "f")
    tests = rng.uniform(size=(5, 3))
    a, b = fleet.predict_fleet(fitted, tests), fleet.predict_fleet(back, tests)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.var, b.var)


def test_table_round_trip(fitted, tmp_path, rng):
    table = fleet.predict_fleet(fitted, rng.uniform(size=(4, 3)))
    path = tmp_path / "t.bin"
    fleet.save_table(table, path, {"seed": 3, "config_hash": "abc"})
    back = fleet.load_table(path)
    assert back.cells == table.cells
    for name in ("mean", "var", "tests"):
        assert np.array_equal(getattr(back, name), getattr(table, name))
    assert back.meta["seed"] == 3 and back.meta["config_hash"] == "abc"


def test_failed_cells_are_recorded(monkeypatch, eight_cells):
    real = gp.fit

    def flaky(x, y, config=None):
        if y[0] == eight_cells.outputs[0, 2]:
            raise gp.FitError("boom", {"restarts": 0})
        return real(x, y, config)

    monkeypatch.setattr(gp, "fit", flaky)
    f = fleet.train_fleet(eight_cells, gp.FitConfig(restarts=1), seed=5)
    bad = eight_cells.grid.sim_points[2]
    assert bad in f.failed and bad not in f.emulators
    assert len(f) == 7


def test_empty_inputs_rejected(fitted):
    with pytest.raises(ValueError):
        fleet.predict_fleet(fitted, np.empty((0, 3)))
