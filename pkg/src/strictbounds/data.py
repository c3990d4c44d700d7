"""Parameter spaces, ensembles, observations and their CSV/JSON formats.

Ensemble CSV
    ``member,param:<name>...,cell:<lat>:<lon>:<time>...`` with one row per
    ensemble member. Cell columns are keyed by the *sim* point of a matched
    pair.
Observation CSV
    ``lat,lon,time,z,meas_var`` keyed by the *satellite* point; an empty
    ``z`` marks a missing retrieval.
Parameter space JSON
    ``[{"name": ..., "min": ..., "max": ...}, ...]``
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import RangeViolation, SchemaError
from .grid import MatchedGrid, SpaceTimePoint, wrap_lon


def fmt(x) -> str:
    """Round-trip-safe decimal representation."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ParameterSpace:
    names: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise SchemaError("names and bounds differ in length")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("parameter names must be unique")
        for n, lo, hi in zip(self.names, self.lower, self.upper):
            if not lo < hi:
                raise SchemaError(f"parameter {n!r}: min {lo} not below max {hi}")

    @classmethod
    def from_list(cls, entries) -> "ParameterSpace":
        try:
            return cls(
                tuple(e["name"] for e in entries),
                tuple(e["min"] for e in entries),
                tuple(e["max"] for e in entries),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad parameter space entry: {exc}") from None

    def to_list(self) -> list:
        return [
            {"name": n, "min": lo, "max": hi}
            for n, lo, hi in zip(self.names, self.lower, self.upper)
        ]

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def ranges(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def validate(self, values) -> np.ndarray:
        """Check box membership of one vector or a stack of them."""
        v = np.asarray(values, dtype=float)
        rows = v.reshape(-1, self.dim) if v.size else v.reshape(0, self.dim)
        for row in rows:
            for n, x, lo, hi in zip(self.names, row, self.lower, self.upper):
                if not lo <= x <= hi:
                    raise RangeViolation(n, float(x), lo, hi)
        return v

    def to_unit(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.lower) / self.ranges

    def from_unit(self, unit) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(unit, dtype=float) * self.ranges


@dataclass(frozen=True)
class ParameterVector:
    space: ParameterSpace
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != self.space.dim:
            raise SchemaError("vector length does not match parameter space")
        self.space.validate(vals)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def load_space(path) -> ParameterSpace:
    with open(path, encoding="utf-8") as fh:
        return ParameterSpace.from_list(json.load(fh))


def save_space(space: ParameterSpace, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.to_list(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Ensemble inputs ``(n, p)`` and outputs ``(n, |grid|)`` in grid order."""

    space: ParameterSpace
    grid: MatchedGrid
    inputs: np.ndarray
    outputs: np.ndarray
    members: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.outputs, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.space.dim:
            raise SchemaError("ensemble inputs must be (n, p)")
        if x.shape[0] < 2:
            raise SchemaError(f"an ensemble needs at least two members, got {x.shape[0]}")
        if y.shape != (x.shape[0], len(self.grid)):
            raise SchemaError(f"outputs shape {y.shape} does not match ensemble and grid")
        if not np.all(np.isfinite(y)):
            raise SchemaError("ensemble outputs must be finite")
        self.space.validate(x)
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "outputs", y)
        if not self.members:
            object.__setattr__(self, "members", tuple(str(i) for i in range(x.shape[0])))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Observation ``z`` (NaN where missing) and measurement variance per cell."""

    grid: MatchedGrid
    z: np.ndarray
    meas_var: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        mv = np.asarray(self.meas_var, dtype=float)
        if z.shape != (len(self.grid),) or mv.shape != z.shape:
            raise SchemaError("observation arrays must match the grid length")
        present = ~np.isnan(z)
        if np.any(~np.isfinite(mv[present])) or np.any(mv[present] < 0):
            raise SchemaError("measurement variance must be finite and nonnegative")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "meas_var", mv)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.z)


@dataclass(frozen=True)
class NoiseModel:
    meas_var: np.ndarray
    other_var: float = 0.0

    def __post_init__(self):
        if not self.other_var >= 0:
            raise ValueError("discrepancy variance must be nonnegative")

    def total(self, emu_var) -> np.ndarray:
        emu_var = np.asarray(emu_var, dtype=float)
        if np.any(emu_var < 0):
            raise ValueError("emulator variance must be nonnegative")
        return emu_var + self.meas_var + self.other_var


def write_ensemble(path, train: TrainingSet):
    header = ["member"] + [f"param:{n}" for n in train.space.names]
    header += [f"cell:{s.lat!r}:{s.lon!r}:{s.time}" for s in train.grid.sim_points]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for name, u, y in zip(train.members, train.inputs, train.outputs):
            w.writerow([name] + [fmt(v) for v in u] + [fmt(v) for v in y])


def _point_key(lat, lon, time):
    return (round(float(lat), 6), round(wrap_lon(float(lon)), 6), int(time))


def load_ensemble(path, space: ParameterSpace, grid: MatchedGrid) -> TrainingSet:
    """Read an ensemble CSV onto ``grid``.

    Raises
    ------
    SchemaError
        Missing parameter or cell column, or fewer than two members.
    RangeViolation
        A parameter value outside its range.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty ensemble file") from None
        rows = [r for r in reader if r]
    if not header or header[0] != "member":
        raise SchemaError("ensemble header must start with 'member'")
    col = {h: i for i, h in enumerate(header)}
    try:
        pcols = [col[f"param:{n}"] for n in space.names]
    except KeyError as exc:
        raise SchemaError(f"missing parameter column {exc.args[0]}") from None
    cell_cols = {}
    for h, i in col.items():
        if h.startswith("cell:"):
            try:
                lat, lon, t = h[5:].split(":")
                cell_cols[_point_key(lat, lon, t)] = i
            except ValueError:
                raise SchemaError(f"malformed cell column {h!r}") from None
    ccols = []
    for s in grid.sim_points:
        key = _point_key(s.lat, s.lon, s.time)
        if key not in cell_cols:
            raise SchemaError(f"missing cell column for {s.cell_id()}")
        ccols.append(cell_cols[key])

    members, inputs, outputs = [], [], []
    for r in rows:
        if len(r) != len(header):
            raise SchemaError(f"row for member {r[0]!r} has {len(r)} fields, expected {len(header)}")
        members.append(r[0])
        u = [float(r[i]) for i in pcols]
        for n, v, lo, hi in zip(space.names, u, space.lower, space.upper):
            if not lo <= v <= hi:
                raise RangeViolation(n, v, lo, hi)
        inputs.append(u)
        outputs.append([float(r[i]) for i in ccols])
    return TrainingSet(
        space,
        grid,
        np.array(inputs, dtype=float).reshape(-1, space.dim),
        np.array(outputs, dtype=float).reshape(-1, len(grid)),
        tuple(members),
    )


def write_observations(path, obs: ObservationSet):
    """One row per distinct satellite point, in grid order."""
    seen = set()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lat", "lon", "time", "z", "meas_var"])
        for (_, t), z, mv in zip(obs.grid.pairs, obs.z, obs.meas_var):
            if t in seen:
                continue
            seen.add(t)
            w.writerow([repr(t.lat), repr(t.lon), t.time, "" if np.isnan(z) else fmt(z), fmt(mv)])


def load_observations(path, grid: MatchedGrid) -> ObservationSet:
    """Attach observations to each matched pair via its satellite point.

    Grid cells whose satellite point has no row are marked missing.

    Raises
    ------
    SchemaError
        Wrong header, unparsable values, or a negative variance.
    """
    expected = ["lat", "lon", "time", "z", "meas_var"]
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise SchemaError(f"observation header must be {','.join(expected)}")
        for r in reader:
            if not r:
                continue
            try:
                lat, lon, t, z, mv = r
                key = _point_key(lat, lon, int(t))
                zv = float(z) if z.strip() else np.nan
                mvv = float(mv) if mv.strip() else np.nan
            except ValueError:
                raise SchemaError(f"malformed observation row {r!r}") from None
            if not np.isnan(zv) and not (np.isfinite(mvv) and mvv >= 0):
                raise SchemaError(f"invalid measurement variance {mv!r} at {lat},{lon},{t}")
            if np.isnan(mvv):
                mvv = 0.0
            table[key] = (zv, mvv)
    z = np.full(len(grid), np.nan)
    mv = np.zeros(len(grid))
    for i, t in enumerate(grid.sat_points):
        hit = table.get(_point_key(t.lat, t.lon, t.time))
        if hit is not None:
            z[i], mv[i] = hit
    return ObservationSet(grid, z, mv)


def sample_test_parameters(space: ParameterSpace, count: int, seed: int, strategy="uniform") -> np.ndarray:
    """Draw ``count`` parameter vectors as rows of a ``(count, p)`` array.

    ``strategy="uniform"`` draws every coordinate independently and
    uniformly on its range; ``"lhs"`` uses a Latin hypercube instead.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if strategy == "uniform":
        rng = np.random.default_rng(seed)
        unit = rng.uniform(size=(count, space.dim))
    elif strategy == "lhs":
        unit = qmc.LatinHypercube(d=space.dim, seed=np.random.default_rng(seed)).random(count)
    else:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    out = space.from_unit(unit)
    # guard against rounding just past the upper bound
    return np.clip(out, space.lower, space.upper)
