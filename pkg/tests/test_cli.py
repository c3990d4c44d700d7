import csv
import json
import os

import numpy as np
import pytest

from strictbounds import pipeline
from strictbounds.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_PRECONDITION, main
from strictbounds.errors import ConfigMismatch, StageDependencyError

SMALL = {
    "synth": {"cells": 24, "n_members": 20, "n_outliers": 1, "missing_fraction": 0.05},
    "train": {"restarts": 1},
    "predict": {"count": 150},
    "hm": {"mc_samples": 2000},
    "invert": {"bins": 5},
}


def write_manifest(path, workdir, **extra):
    body = {"paths": {"workdir": str(workdir)}, **SMALL, **extra}
    path.write_text(json.dumps(body))
    return path


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    m = write_manifest(root / "m.json", root / "w")
    assert main(["all", str(m)]) == EXIT_OK
    return root, m


def digests(root):
    out = {}
    for base, _, files in os.walk(root):
        for f in files:
            full = os.path.join(base, f)
            with open(full, "rb") as fh:
                out[os.path.relpath(full, root)] = fh.read()
    return out


def test_chain_outputs(finished):
    root, _ = finished
    w = root / "w"
    for stage in pipeline.STAGES:
        rec = json.loads((w / stage / "stage.json").read_text())
        assert rec["stage"] == stage and len(rec["config_hash"]) == 64
    assert (w / "hm" / "hm_proj2d_theta0__theta1.csv").exists()
    assert (w / "invert" / "proj1d_theta2.csv").exists()
    rows = list(csv.DictReader(open(w / "hm" / "hm_outcomes.csv")))
    assert rows[0]["mode"] == "quantile" and rows[0]["q"] == "0.25"
    summary = json.loads((w / "report" / "summary.json").read_text())
    assert "truth" in summary


def test_rerun_is_noop(finished, capsys):
    root, m = finished
    before = digests(root / "w")
    assert main(["train", str(m)]) == EXIT_OK
    assert "train: cached" in capsys.readouterr().err
    assert digests(root / "w") == before


def test_summary_rederivable_from_artifacts(finished):
    root, _ = finished
    w = root / "w"
    s = json.loads((w / "report" / "summary.json").read_text())
    mstar = json.loads((w / "filter" / "mstar.json").read_text())
    assert s["retained_cells"] == s["df"] == len(mstar["pairs"])
    assert s["delta2"] == json.loads((w / "discrep" / "discrepancy.json").read_text())["delta2"]
    outcomes = list(csv.DictReader(open(w / "test" / "outcomes.csv")))
    assert s["retained"] == sum(r["reject"] == "0" for r in outcomes)
    assert s["critical"] == float(outcomes[0]["critical"])
    with open(w / "invert" / "confidence_set.csv") as fh:
        assert s["retained"] == len(fh.readlines()) - 1
    text = (w / "report" / "summary.txt").read_text()
    assert "discrepancy variance" in text and "mean measurement variance" in text


def test_config_drift_refused(finished, tmp_path):
    root, _ = finished
    m2 = write_manifest(tmp_path / "m2.json", root / "w", predict={"count": 151})
    manifest = pipeline.RunManifest.load(m2)
    with pytest.raises(ConfigMismatch):
        pipeline.run_stage("filter", manifest)
    assert main(["filter", str(m2)]) == EXIT_PRECONDITION


def test_missing_upstream(tmp_path):
    m = write_manifest(tmp_path / "m.json", tmp_path / "w")
    with pytest.raises(StageDependencyError) as err:
        pipeline.run_stage("train", pipeline.RunManifest.load(m))
    assert "match" in str(err.value)
    assert main(["discrep", str(m)]) == EXIT_PRECONDITION


def test_hash_stable_under_reordering(tmp_path):
    a = {"paths": {"workdir": "w"}, "train": {"restarts": 2, "maxiter": 50}, "test": {"level": 0.1}}
    b = {"test": {"level": 0.1}, "train": {"maxiter": 50, "restarts": 2}, "paths": {"workdir": "w"}}
    ha = pipeline.RunManifest.from_dict(a).config_hash()
    hb = pipeline.RunManifest.from_dict(b).config_hash()
    assert ha == hb
    c = pipeline.RunManifest.from_dict({**a, "workers": 8, "paths": {"workdir": "elsewhere"}})
    assert c.config_hash() == ha
    assert pipeline.RunManifest.from_dict({**a, "test": {"level": 0.2}}).config_hash() != ha


def test_empty_set_reported(finished, tmp_path, capsys):
    root, _ = finished
    import shutil

    shutil.copytree(root / "w", tmp_path / "w")
    m = write_manifest(tmp_path / "m.json", tmp_path / "w")
    assert main(["test", str(m), "--level", "0.9999999"]) == EXIT_OK
    assert main(["invert", str(m), "--level", "0.9999999"]) == EXIT_OK
    assert main(["report", str(m), "--level", "0.9999999"]) == EXIT_OK
    assert "no parameter retained" in capsys.readouterr().out


def test_numerical_failure_exit_code(finished, tmp_path):
    root, _ = finished
    synth = root / "w" / "synth"
    obs = tmp_path / "obs.csv"
    with open(synth / "observations.csv") as src, open(obs, "w") as dst:
        rows = list(csv.reader(src))
        w = csv.writer(dst, lineterminator="\n")
        w.writerow(rows[0])
        for r in rows[1:]:
            w.writerow(r[:3] + ["", r[4]])
    grids = json.loads((synth / "grids.json").read_text())
    space = json.loads((synth / "space.json").read_text())
    body = {
        "paths": {"workdir": str(tmp_path / "w"), "ensemble": str(synth / "ensemble.csv"), "observations": str(obs)},
        "parameter_space": space,
        "grids": grids,
        **{k: v for k, v in SMALL.items() if k != "synth"},
    }
    m = tmp_path / "m.json"
    m.write_text(json.dumps(body))
    assert main(["all", str(m)]) == EXIT_NUMERICAL
    assert (tmp_path / "w" / "filter" / "stage.json").exists()
    assert not (tmp_path / "w" / "discrep").exists()


def test_bad_manifest(tmp_path):
    m = tmp_path / "m.json"
    m.write_text("{not json")
    assert main(["match", str(m)]) == EXIT_PRECONDITION
    m.write_text(json.dumps({"paths": {}}))
    assert main(["match", str(m)]) == EXIT_PRECONDITION
    assert main(["match", str(tmp_path / "absent.json")]) == EXIT_PRECONDITION
