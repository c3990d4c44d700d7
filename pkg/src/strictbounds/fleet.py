"""Per-cell emulator collections: parallel training, batch prediction, storage."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gp
from .data import TrainingSet
from .errors import NumericalError
from .grid import MatchedGrid, SpaceTimePoint

log = logging.getLogger(__name__)

FLEET_FORMAT = 1
TABLE_MAGIC = b"SBPREDTABLE1\n"


def cell_seed(seed: int, cell: SpaceTimePoint) -> int:
    """Stable per-cell seed, independent of scheduling and hash randomisation."""
    h = hashlib.blake2b(f"{int(seed)}|{cell.cell_id()}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass(frozen=True, eq=False)
class EmulatorFleet:
    grid: MatchedGrid
    emulators: dict  # SpaceTimePoint -> CellEmulator, in grid order
    failed: dict = field(default_factory=dict)  # SpaceTimePoint -> diagnostics

    @property
    def cells(self) -> list:
        return list(self.emulators)

    def __len__(self):
        return len(self.emulators)


@dataclass(frozen=True, eq=False)
class PredictionTable:
    """Emulated mean and variance for every (cell, test vector) pair."""

    cells: tuple
    tests: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.cells), len(self.tests))
        if self.mean.shape != shape or self.var.shape != shape:
            raise ValueError(f"prediction arrays must have shape {shape}")

    @property
    def n_tests(self) -> int:
        return self.mean.shape[1]

    def row_index(self) -> dict:
        return {c: i for i, c in enumerate(self.cells)}


def _chunks(n, workers):
    if n == 0:
        return []
    size = max(1, -(-n // (4 * max(workers, 1))))
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _fit_chunk(inputs, columns, seeds, config):
    out = []
    for y, s in zip(columns, seeds):
        try:
            emu = gp.fit(inputs, y, replace(config, seed=s))
            out.append(("ok", emu.hyper.to_dict(), emu.info))
        except NumericalError as exc:
            out.append(("failed", str(exc), getattr(exc, "diagnostics", [])))
    return out


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def train_fleet(train: TrainingSet, config: gp.FitConfig | None = None, seed: int = 0, workers: int = 1) -> EmulatorFleet:
    """Fit one emulator per grid cell.

    Each cell gets its own seed derived from ``seed`` and the cell id, so
    the fitted fleet does not depend on ``workers``. Cells whose fit fails
    are left out and listed in ``fleet.failed``.
    """
    config = config or gp.FitConfig(param_ranges=tuple(train.space.ranges))
    if config.param_ranges is None:
        config = replace(config, param_ranges=tuple(train.space.ranges))
    cells = train.grid.sim_points
    if not cells:
        raise ValueError("cannot train a fleet on an empty grid")
    seeds = [cell_seed(seed, c) for c in cells]
    tasks = [
        (train.inputs, [train.outputs[:, i] for i in idx], [seeds[i] for i in idx], config)
        for idx in _chunks(len(cells), workers)
    ]
    results = [r for chunk in _map(_fit_chunk, tasks, workers) for r in chunk]

    emulators, failed = {}, {}
    for cell, i, (status, payload, extra) in zip(cells, range(len(cells)), results):
        if status == "ok":
            hyper = gp.Hyperparameters.from_dict(payload)
            emulators[cell] = gp.CellEmulator.from_hyper(
                hyper, train.inputs, train.outputs[:, i], extra
            )
        else:
            log.warning("emulator fit failed at %s: %s", cell.cell_id(), payload)
            failed[cell] = {"error": payload, "diagnostics": extra}
    return EmulatorFleet(train.grid, emulators, failed)


def _predict_chunk(hypers, inputs, outputs, tests):
    means, vars_ = [], []
    for h, y in zip(hypers, outputs):
        emu = gp.CellEmulator.from_hyper(gp.Hyperparameters.from_dict(h), inputs, y)
        m, v = gp.predict(emu, tests)
        means.append(m)
        vars_.append(v)
    return means, vars_


def predict_fleet(fleet: EmulatorFleet, tests, workers: int = 1) -> PredictionTable:
    """Evaluate every emulator at every test vector."""
    tests = np.atleast_2d(np.asarray(tests, dtype=float))
    if len(fleet) == 0 or tests.shape[0] == 0:
        raise ValueError("predict_fleet needs a nonempty fleet and test set")
    emus = list(fleet.emulators.values())
    if workers <= 1:
        pairs = [gp.predict(e, tests) for e in emus]
        mean = np.array([m for m, _ in pairs])
        var = np.array([v for _, v in pairs])
    else:
        inputs = emus[0].inputs
        tasks = [
            (
                [emus[i].hyper.to_dict() for i in idx],
                inputs,
                [emus[i].outputs for i in idx],
                tests,
            )
            for idx in _chunks(len(emus), workers)
        ]
        res = _map(_predict_chunk, tasks, workers)
        mean = np.array([m for ms, _ in res for m in ms])
        var = np.array([v for _, vs in res for v in vs])
    return PredictionTable(tuple(fleet.cells), tests, mean, var)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def save_fleet(fleet: EmulatorFleet, directory, extra_meta=None):
    """One JSON file per cell plus ``index.json``; byte-stable output."""
    os.makedirs(os.path.join(directory, "cells"), exist_ok=True)
    cells = fleet.cells
    inputs = fleet.emulators[cells[0]].inputs.tolist() if cells else []
    entries = []
    for i, c in enumerate(cells):
        name = f"cells/cell_{i:06d}.json"
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(_dump(fleet.emulators[c].to_dict(include_inputs=False)))
        entries.append({"cell": c.cell_id(), "file": name})
    index = {
        "format_version": FLEET_FORMAT,
        "grid": fleet.grid.to_dict(),
        "inputs": inputs,
        "cells": entries,
        "failed": {c.cell_id(): d for c, d in fleet.failed.items()},
        "meta": extra_meta or {},
    }
    with open(os.path.join(directory, "index.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(index))


def load_fleet(directory) -> EmulatorFleet:
    with open(os.path.join(directory, "index.json"), encoding="utf-8") as fh:
        index = json.load(fh)
    if index.get("format_version") != FLEET_FORMAT:
        raise ValueError(f"unsupported fleet format {index.get('format_version')!r}")
    inputs = np.asarray(index["inputs"], dtype=float)
    emulators = {}
    for e in index["cells"]:
        with open(os.path.join(directory, e["file"]), encoding="utf-8") as fh:
            emulators[SpaceTimePoint.parse(e["cell"])] = gp.CellEmulator.from_dict(json.load(fh), inputs)
    failed = {SpaceTimePoint.parse(k): v for k, v in index["failed"].items()}
    return EmulatorFleet(MatchedGrid.from_dict(index["grid"]), emulators, failed)


def save_table(table: PredictionTable, path, extra_meta=None):
    """Binary matrix file: magic line, JSON header line, raw little-endian doubles.

    The payload is ``mean``, ``var`` (each cells x tests, C order) followed
    by ``tests`` (tests x p).
    """
    header = {
        "n_cells": len(table.cells),
        "n_tests": table.n_tests,
        "dim": int(table.tests.shape[1]),
        "dtype": "<f8",
        "order": ["mean", "var", "tests"],
        "cells": [c.cell_id() for c in table.cells],
        "meta": {**table.meta, **(extra_meta or {})},
    }
    with open(path, "wb") as fh:
        fh.write(TABLE_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for arr in (table.mean, table.var, table.tests):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_table(path) -> PredictionTable:
    with open(path, "rb") as fh:
        if fh.readline() != TABLE_MAGIC:
            raise ValueError(f"{path} is not a prediction table")
        header = json.loads(fh.readline().decode("utf-8"))
        payload = fh.read()
    m, k, p = header["n_cells"], header["n_tests"], header["dim"]
    flat = np.frombuffer(payload, dtype="<f8")
    if flat.size != 2 * m * k + k * p:
        raise ValueError(f"{path}: truncated payload")
    mean = flat[: m * k].reshape(m, k).copy()
    var = flat[m * k : 2 * m * k].reshape(m, k).copy()
    tests = flat[2 * m * k :].reshape(k, p).copy()
    cells = tuple(SpaceTimePoint.parse(c) for c in header["cells"])
    return PredictionTable(cells, tests, mean, var, header.get("meta", {}))
