"""Stage runner: manifest, hashed artifacts, and the end-of-run summary.

Every stage writes into ``<workdir>/<stage>/`` together with a
``stage.json`` record holding the stage key (a hash of the stage's
configuration, its input file contents and its upstream keys) and the
SHA-256 of every artifact. Re-running a stage whose key and artifacts are
unchanged does nothing.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import confset, discrepancy, fleet, gp, history_matching, outliers, plausibility, synthetic
from .data import (
    ParameterSpace,
    fmt,
    load_ensemble,
    load_observations,
    load_space,
    sample_test_parameters,
    save_space,
    write_ensemble,
    write_observations,
)
from .errors import ConfigMismatch, PreconditionError, SchemaError, StageDependencyError
from .grid import MatchedGrid, RegularGrid, SpaceTimePoint, match_grids

log = logging.getLogger(__name__)

STAGES = ("synth", "match", "train", "predict", "filter", "discrep", "test", "invert", "hm", "report")
UPSTREAM = {
    "synth": (),
    "match": (),
    "train": ("match",),
    "predict": ("train",),
    "filter": ("predict",),
    "discrep": ("filter",),
    "test": ("discrep",),
    "invert": ("test",),
    "hm": ("discrep",),
    "report": ("invert",),
}

DEFAULTS = {
    "seeds": {"train": 0, "test": 1, "hm": 2},
    "synth": {
        "cells": 200, "p": 3, "n_members": 60, "delta2": 0.0005,
        "meas_var": [0.0005, 0.0015], "amplitude": 0.08, "n_outliers": 0,
        "missing_fraction": 0.0, "seed": 0, "noise_seed": None, "u_star": None,
    },
    "train": {"restarts": 5, "maxiter": 200},
    "predict": {"count": 5000, "strategy": "uniform"},
    "filter": {"gamma": None, "threshold": None},
    "discrep": {"upper_factor": 10.0, "xatol": 1e-10},
    "test": {"level": 0.05},
    "hm": {"q": 0.25, "N": None, "mc_samples": 100_000, "level": 0.05},
    "invert": {"bins": 20, "pairs": None},
}


def canonical_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _merge(defaults, given):
    out = {}
    for k, v in defaults.items():
        g = (given or {}).get(k, v)
        out[k] = _merge(v, g) if isinstance(v, dict) and isinstance(g, dict) else g
    for k, v in (given or {}).items():
        out.setdefault(k, v)
    return out


@dataclass
class RunManifest:
    workdir: str
    ensemble: str | None = None
    observations: str | None = None
    parameter_space: object = None  # list of {name,min,max}, a path, or None
    grids: dict | None = None  # {"sim": {...}, "sat": {...}}
    config: dict = field(default_factory=dict)
    workers: int = 1
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d, base_dir=".") -> "RunManifest":
        paths = d.get("paths", {})
        if "workdir" not in paths:
            raise SchemaError("manifest needs paths.workdir")
        config = _merge(DEFAULTS, {k: v for k, v in d.items() if k in DEFAULTS})
        return cls(
            workdir=paths["workdir"],
            ensemble=paths.get("ensemble"),
            observations=paths.get("observations"),
            parameter_space=d.get("parameter_space"),
            grids=d.get("grids"),
            config=config,
            workers=int(d.get("workers", 1)),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"manifest is not valid JSON: {exc}") from None
        return cls.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))

    def resolve(self, path) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    @property
    def root(self) -> str:
        return self.resolve(self.workdir)

    def stage_dir(self, stage) -> str:
        return os.path.join(self.root, stage)

    def config_hash(self) -> str:
        """Hash of the scientific configuration; independent of paths and workers."""
        return canonical_hash(
            {"config": self.config, "space": self.parameter_space, "grids": self.grids}
        )


# ---------------------------------------------------------------- stage io


def _read_stage_record(manifest, stage):
    path = os.path.join(manifest.stage_dir(stage), "stage.json")
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _require(manifest, stage, name=None):
    rec = _read_stage_record(manifest, stage)
    if rec is None:
        raise StageDependencyError(f"{stage}/stage.json")
    if name is not None:
        path = os.path.join(manifest.stage_dir(stage), name)
        if not os.path.exists(path):
            raise StageDependencyError(f"{stage}/{name}")
        return path
    return manifest.stage_dir(stage)


def _atomic_publish(tmp, final):
    old = None
    if os.path.exists(final):
        old = final + ".old"
        if os.path.exists(old):
            shutil.rmtree(old)
        os.replace(final, old)
    os.replace(tmp, final)
    if old:
        shutil.rmtree(old)


def _artifact_digests(directory):
    out = {}
    for base, _, files in os.walk(directory):
        for f in sorted(files):
            if f == "stage.json":
                continue
            full = os.path.join(base, f)
            out[os.path.relpath(full, directory).replace(os.sep, "/")] = file_digest(full)
    return dict(sorted(out.items()))


# ------------------------------------------------------------ input lookup


def _space(manifest) -> ParameterSpace:
    ps = manifest.parameter_space
    if isinstance(ps, list):
        return ParameterSpace.from_list(ps)
    if isinstance(ps, str):
        return load_space(manifest.resolve(ps))
    return load_space(_require(manifest, "synth", "space.json"))


def _input_path(manifest, key, synth_name):
    given = getattr(manifest, key)
    if given:
        path = manifest.resolve(given)
        if not os.path.exists(path):
            raise StageDependencyError(path)
        return path
    return _require(manifest, "synth", synth_name)


def _grids(manifest):
    if manifest.grids:
        g = manifest.grids
        try:
            return RegularGrid.from_dict(g["sim"]), RegularGrid.from_dict(g["sat"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad grid definition: {exc}") from None
    with open(_require(manifest, "synth", "grids.json"), encoding="utf-8") as fh:
        g = json.load(fh)
    return RegularGrid.from_dict(g["sim"]), RegularGrid.from_dict(g["sat"])


def _load_grid(path) -> MatchedGrid:
    with open(path, encoding="utf-8") as fh:
        return MatchedGrid.from_dict(json.load(fh))


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _stage_inputs(manifest, stage) -> dict:
    """Configuration and input-file digests that determine a stage's output."""
    c = manifest.config
    space_spec = manifest.parameter_space if not isinstance(manifest.parameter_space, str) else {
        "file": file_digest(manifest.resolve(manifest.parameter_space))
    }
    if stage == "synth":
        return {"synth": c["synth"]}
    if stage == "match":
        return {"grids": manifest.grids}
    if stage == "train":
        inp = {"train": c["train"], "seed": c["seeds"]["train"], "space": space_spec}
        if manifest.ensemble:
            inp["ensemble"] = file_digest(_input_path(manifest, "ensemble", "ensemble.csv"))
        return inp
    if stage == "predict":
        return {"predict": c["predict"], "seed": c["seeds"]["test"], "space": space_spec}
    if stage == "filter":
        inp = {"filter": c["filter"]}
        if manifest.observations:
            inp["observations"] = file_digest(_input_path(manifest, "observations", "observations.csv"))
        return inp
    if stage == "discrep":
        return {"discrep": c["discrep"]}
    if stage == "test":
        return {"test": c["test"]}
    if stage == "invert":
        return {"invert": c["invert"], "space": space_spec}
    if stage == "hm":
        return {"hm": c["hm"], "seed": c["seeds"]["hm"], "invert": c["invert"], "space": space_spec}
    if stage == "report":
        return {}
    raise ValueError(f"unknown stage {stage!r}")


def expected_key(manifest, stage, force=False) -> str:
    ups = {}
    for up in UPSTREAM[stage]:
        rec = _read_stage_record(manifest, up)
        if rec is None:
            raise StageDependencyError(f"{up}/stage.json")
        want = expected_key(manifest, up, force=True)
        if rec["key"] != want:
            msg = f"upstream stage {up!r} was produced with a different configuration"
            if not force:
                raise ConfigMismatch(msg + " (use --force to proceed)")
            log.warning(msg)
        ups[up] = rec["key"]
    if stage == "train" and not manifest.ensemble or stage == "filter" and not manifest.observations:
        rec = _read_stage_record(manifest, "synth")
        if rec is None:
            raise StageDependencyError("synth/stage.json")
        ups["synth"] = rec["key"]
    if stage in ("train", "predict", "invert", "hm") and manifest.parameter_space is None:
        rec = _read_stage_record(manifest, "synth")
        if rec is None:
            raise StageDependencyError("synth/stage.json")
        ups["synth"] = rec["key"]
    if stage == "match" and not manifest.grids:
        rec = _read_stage_record(manifest, "synth")
        if rec is None:
            raise StageDependencyError("synth/stage.json")
        ups["synth"] = rec["key"]
    return canonical_hash({"stage": stage, "inputs": _stage_inputs(manifest, stage), "upstream": ups})


def run_stage(stage: str, manifest: RunManifest, force: bool = False) -> dict:
    """Run one stage; returns its ``stage.json`` record.

    Raises
    ------
    StageDependencyError
        An upstream artifact is missing.
    ConfigMismatch
        An upstream stage was produced by a different configuration and
        ``force`` is false.
    """
    if stage not in STAGES:
        raise PreconditionError(f"unknown stage {stage!r}")
    key = expected_key(manifest, stage, force=force)
    final = manifest.stage_dir(stage)
    rec = _read_stage_record(manifest, stage)
    if rec is not None and rec.get("key") == key and not force and stage != "report":
        if _artifact_digests(final) == rec.get("artifacts"):
            log.info("stage %s is up to date", stage)
            return {**rec, "cached": True}

    os.makedirs(manifest.root, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=f".tmp-{stage}-", dir=manifest.root)
    try:
        extra = RUNNERS[stage](manifest, tmp) or {}
        record = {
            "stage": stage,
            "key": key,
            "config_hash": manifest.config_hash(),
            "artifacts": _artifact_digests(tmp),
            **extra,
        }
        _dump_json(record, os.path.join(tmp, "stage.json"))
        _atomic_publish(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return {**record, "cached": False}


# ------------------------------------------------------------------ stages


def _synth_spec(manifest) -> synthetic.SyntheticSpec:
    s = manifest.config["synth"]
    mv = s["meas_var"]
    return synthetic.SyntheticSpec(
        space=synthetic.default_space(int(s["p"])),
        grid=synthetic.grid_for_cells(int(s["cells"])),
        u_star=tuple(s["u_star"]) if s.get("u_star") is not None else None,
        delta2=float(s["delta2"]),
        meas_var=tuple(mv) if isinstance(mv, list) else mv,
        n_members=int(s["n_members"]),
        amplitude=float(s["amplitude"]),
        n_outliers=int(s["n_outliers"]),
        missing_fraction=float(s["missing_fraction"]),
        seed=int(s["seed"]),
        noise_seed=s.get("noise_seed"),
    )


def _run_synth(manifest, out):
    spec = _synth_spec(manifest)
    train, obs, truth = synthetic.generate(spec)
    write_ensemble(os.path.join(out, "ensemble.csv"), train)
    write_observations(os.path.join(out, "observations.csv"), obs)
    save_space(spec.space, os.path.join(out, "space.json"))
    synthetic.write_truth(truth, os.path.join(out, "truth.json"))
    _dump_json({"sim": spec.grid.to_dict(), "sat": spec.grid.to_dict()}, os.path.join(out, "grids.json"))
    return {"cells": len(spec.cells), "members": train.n}


def _run_match(manifest, out):
    sim, sat = _grids(manifest)
    m = match_grids(sim, sat)
    _dump_json(m.to_dict(), os.path.join(out, "matched_grid.json"))
    return {"cells": len(m)}


def _run_train(manifest, out):
    grid = _load_grid(_require(manifest, "match", "matched_grid.json"))
    space = _space(manifest)
    train = load_ensemble(_input_path(manifest, "ensemble", "ensemble.csv"), space, grid)
    c = manifest.config["train"]
    cfg = gp.FitConfig(restarts=int(c["restarts"]), maxiter=int(c["maxiter"]), param_ranges=tuple(space.ranges))
    fl = fleet.train_fleet(train, cfg, seed=int(manifest.config["seeds"]["train"]), workers=manifest.workers)
    fleet.save_fleet(fl, os.path.join(out, "fleet"), {"fit_config": cfg.to_dict()})
    return {"cells": len(fl), "failed": len(fl.failed)}


def _run_predict(manifest, out):
    fl = fleet.load_fleet(os.path.join(_require(manifest, "train"), "fleet"))
    space = _space(manifest)
    c = manifest.config["predict"]
    seed = int(manifest.config["seeds"]["test"])
    tests = sample_test_parameters(space, int(c["count"]), seed, c["strategy"])
    table = fleet.predict_fleet(fl, tests, workers=manifest.workers)
    fleet.save_table(table, os.path.join(out, "predictions.bin"), {"seed": seed, "config_hash": manifest.config_hash()})
    with open(os.path.join(out, "tests.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + list(space.names))
        for k, u in enumerate(tests):
            w.writerow([k] + [fmt(v) for v in u])
    return {"tests": len(tests)}


def _load_inputs_for_stats(manifest):
    grid = _load_grid(_require(manifest, "match", "matched_grid.json"))
    table = fleet.load_table(_require(manifest, "predict", "predictions.bin"))
    obs = load_observations(_input_path(manifest, "observations", "observations.csv"), grid)
    return grid, table, obs


def _load_mstar(manifest) -> MatchedGrid:
    return _load_grid(_require(manifest, "filter", "mstar.json"))


def _run_filter(manifest, out):
    grid, table, obs = _load_inputs_for_stats(manifest)
    c = manifest.config["filter"]
    rep = outliers.find_outliers(table, obs, gamma=c["gamma"], threshold=c["threshold"])
    with open(os.path.join(_require(manifest, "train"), "fleet", "index.json"), encoding="utf-8") as fh:
        failed = [SpaceTimePoint.parse(k) for k in json.load(fh)["failed"]]
    mstar = rep.mstar(grid, extra_excluded=failed)
    outliers.write_report(rep, os.path.join(out, "filter.csv"), os.path.join(out, "qq.csv"))
    _dump_json(mstar.to_dict(), os.path.join(out, "mstar.json"))
    summary = {
        "cells": len(grid),
        "retained": len(mstar),
        "outliers": len(rep.outliers),
        "missing": len(rep.missing),
        "failed_fits": len(failed),
        "gamma": rep.gamma,
        "threshold": rep.threshold,
        "best_k": rep.best_k,
    }
    _dump_json(summary, os.path.join(out, "filter_summary.json"))
    return summary


def _run_discrep(manifest, out):
    grid, table, obs = _load_inputs_for_stats(manifest)
    mstar = _load_mstar(manifest)
    c = manifest.config["discrep"]
    cfg = discrepancy.BracketConfig(upper_factor=float(c["upper_factor"]), xatol=float(c["xatol"]))
    est = discrepancy.estimate(table, obs, mstar, cfg)
    discrepancy.write_estimate(
        est,
        os.path.join(out, "discrepancy.json"),
        os.path.join(out, "discrepancy_per_k.csv"),
        {"config_hash": manifest.config_hash()},
    )
    return est.to_dict()


def _delta2(manifest) -> float:
    return float(discrepancy.read_estimate(_require(manifest, "discrep", "discrepancy.json"))["delta2"])


def _run_test(manifest, out):
    grid, table, obs = _load_inputs_for_stats(manifest)
    mstar = _load_mstar(manifest)
    level = float(manifest.config["test"]["level"])
    outcomes = plausibility.test_all(table, obs, mstar, _delta2(manifest), level)
    plausibility.write_outcomes(outcomes, os.path.join(out, "outcomes.csv"))
    return {"df": len(mstar), "level": level, "critical": outcomes[0].critical, "rejected": sum(o.reject for o in outcomes)}


def _pairs(manifest, p):
    pairs = manifest.config["invert"]["pairs"]
    if pairs is None:
        pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    return [tuple(pr) for pr in pairs]


def _write_projections(manifest, out, tests, outcomes, space, prefix=""):
    bins = int(manifest.config["invert"]["bins"])
    names = space.names
    bounds = list(zip(space.lower, space.upper))
    flags = {}
    for i, name in enumerate(names):
        pr = confset.project_1d(tests, outcomes, i, bins, bounds[i])
        confset.write_projection_1d(pr, os.path.join(out, f"{prefix}proj1d_{name}.csv"), name)
        flags[name] = pr.constrained
    for i, j in _pairs(manifest, len(names)):
        pr = confset.project_2d(tests, outcomes, (i, j), bins, (bounds[i], bounds[j]))
        confset.write_projection_2d(pr, os.path.join(out, f"{prefix}proj2d_{names[i]}__{names[j]}.csv"), (names[i], names[j]))
    return flags


def _run_invert(manifest, out):
    table = fleet.load_table(_require(manifest, "predict", "predictions.bin"))
    space = _space(manifest)
    level = float(_read_stage_record(manifest, "test")["level"])
    outcomes = plausibility.read_outcomes(_require(manifest, "test", "outcomes.csv"), level)
    cs = confset.invert(outcomes, table.tests, manifest.config_hash())
    confset.write_confidence_set(cs, os.path.join(out, "confidence_set.csv"), space.names)
    flags = _write_projections(manifest, out, table.tests, outcomes, space)
    result = {"retained": len(cs), "tested": cs.n_tested, "level": level, "constrained_1d": flags}
    _dump_json(result, os.path.join(out, "constraints.json"))
    return result


def _hm_config(manifest) -> history_matching.HMConfig:
    c = manifest.config["hm"]
    return history_matching.HMConfig(
        q=None if c["q"] is None else float(c["q"]),
        n_th=None if c["N"] is None else int(c["N"]),
        level=float(c["level"]),
        mc_samples=int(c["mc_samples"]),
        seed=int(manifest.config["seeds"]["hm"]),
    )


def _run_hm(manifest, out):
    grid, table, obs = _load_inputs_for_stats(manifest)
    mstar = _load_mstar(manifest)
    space = _space(manifest)
    cfg = _hm_config(manifest)
    outcomes = history_matching.hm_test_all(table, obs, mstar, _delta2(manifest), cfg)
    plausibility.write_outcomes(outcomes, os.path.join(out, "hm_outcomes.csv"), cfg.tags())
    cs = confset.invert(outcomes, table.tests, manifest.config_hash())
    confset.write_confidence_set(cs, os.path.join(out, "hm_confidence_set.csv"), space.names)
    flags = _write_projections(manifest, out, table.tests, outcomes, space, prefix="hm_")
    result = {
        "retained": len(cs), "tested": cs.n_tested, "critical": outcomes[0].critical,
        "seed": cfg.seed, "mc_samples": cfg.mc_samples, **cfg.tags(), "constrained_1d": flags,
    }
    _dump_json(result, os.path.join(out, "hm_constraints.json"))
    return result


def _truth_check(manifest, obs, mstar, delta2, critical):
    """Run the test at the synthetic truth, when one is known."""
    path = os.path.join(manifest.stage_dir("synth"), "truth.json")
    if manifest.ensemble or not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        truth = json.load(fh)
    fl = fleet.load_fleet(os.path.join(_require(manifest, "train"), "fleet"))
    u = np.asarray(truth["u_star"], dtype=float)
    table = fleet.predict_fleet(fl, u[None, :])
    stat = plausibility.implausibility(0, table, obs, mstar, delta2)
    return {"u_star": truth["u_star"], "statistic": stat, "retained": bool(stat <= critical)}


def summarize(manifest) -> dict:
    """Collect the headline numbers from the artifacts on disk."""
    grid, table, obs = _load_inputs_for_stats(manifest)
    mstar = _load_mstar(manifest)
    est = discrepancy.read_estimate(_require(manifest, "discrep", "discrepancy.json"))
    with open(_require(manifest, "filter", "filter_summary.json"), encoding="utf-8") as fh:
        filt = json.load(fh)
    with open(_require(manifest, "invert", "constraints.json"), encoding="utf-8") as fh:
        inv = json.load(fh)
    outcomes = plausibility.read_outcomes(_require(manifest, "test", "outcomes.csv"))
    critical = outcomes[0].critical if outcomes else float("nan")

    rows = table.row_index()
    oi = obs.grid.index()
    idx = [rows[c] for c in mstar.sim_points]
    k = int(est["best_k"])
    summary = {
        "cells": len(grid),
        "retained_cells": len(mstar),
        "excluded_fraction": 1.0 - len(mstar) / len(grid) if len(grid) else 0.0,
        "outlier_cells": filt["outliers"],
        "missing_cells": filt["missing"],
        "failed_fits": filt["failed_fits"],
        "delta2": est["delta2"],
        "best_k": k,
        "mean_meas_var": float(np.mean(obs.meas_var[[oi[c] for c in mstar.sim_points]])),
        "mean_emu_var": float(np.mean(table.var[idx, k])),
        "df": len(mstar),
        "level": inv["level"],
        "critical": critical,
        "tested": inv["tested"],
        "retained": inv["retained"],
        "constrained_1d": inv["constrained_1d"],
    }
    hm_path = os.path.join(manifest.stage_dir("hm"), "hm_constraints.json")
    if os.path.exists(hm_path):
        with open(hm_path, encoding="utf-8") as fh:
            hm = json.load(fh)
        summary["hm"] = {k2: hm[k2] for k2 in ("retained", "critical", "mode", "q", "N")}
    truth = _truth_check(manifest, obs, mstar, est["delta2"], critical)
    if truth is not None:
        summary["truth"] = truth
    return summary


def format_summary(s) -> str:
    lines = [
        f"grid cells |M|            {s['cells']}",
        f"retained cells |M*|       {s['retained_cells']}",
        f"excluded fraction         {s['excluded_fraction']:.4f}"
        f" (outliers {s['outlier_cells']}, missing {s['missing_cells']}, failed fits {s['failed_fits']})",
        f"discrepancy variance      {s['delta2']:.6g}",
        f"mean measurement variance {s['mean_meas_var']:.6g}",
        f"mean emulator variance    {s['mean_emu_var']:.6g} (at best test vector {s['best_k']})",
        f"degrees of freedom        {s['df']}",
        f"critical value            {s['critical']:.6g} (level {s['level']})",
    ]
    if s["retained"] == 0:
        lines.append(f"confidence set            no parameter retained (of {s['tested']} tested)")
    else:
        lines.append(f"confidence set            {s['retained']} of {s['tested']} tested vectors retained")
    for name, flag in s["constrained_1d"].items():
        lines.append(f"  {name:<24}{'constrained' if flag else 'not constrained'} in 1-D")
    if "hm" in s:
        hm = s["hm"]
        label = f"N={hm['N']}" if hm["mode"] == "order" else f"q={hm['q']}"
        lines.append(f"history matching ({label})   {hm['retained']} retained, critical {hm['critical']:.6g}")
    if "truth" in s:
        t = s["truth"]
        lines.append(
            f"truth statistic           {t['statistic']:.6g} -> {'retained' if t['retained'] else 'rejected'}"
        )
    return "\n".join(lines) + "\n"


def _run_report(manifest, out):
    s = summarize(manifest)
    _dump_json(s, os.path.join(out, "summary.json"))
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_summary(s))
    return {"retained": s["retained"]}


RUNNERS = {
    "synth": _run_synth,
    "match": _run_match,
    "train": _run_train,
    "predict": _run_predict,
    "filter": _run_filter,
    "discrep": _run_discrep,
    "test": _run_test,
    "invert": _run_invert,
    "hm": _run_hm,
    "report": _run_report,
}


def report(manifest) -> str:
    """Text summary of a finished run."""
    return format_summary(summarize(manifest))
