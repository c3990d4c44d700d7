"""Confidence sets by test inversion, and their 1-D / 2-D projections."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import fmt

DEFAULT_BINS = 20


@dataclass(frozen=True, eq=False)
class ConfidenceSet:
    retained: np.ndarray  # (r, p) retained test vectors
    indices: np.ndarray  # their positions in the tested sample
    level: float
    n_tested: int
    provenance: str = ""

    def __len__(self):
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return len(self.indices) == 0


def _reject_mask(outcomes) -> np.ndarray:
    return np.array([o.reject for o in outcomes], dtype=bool)


def invert(outcomes, tests, provenance="") -> ConfidenceSet:
    """Keep exactly the test vectors whose null was not rejected."""
    tests = np.atleast_2d(np.asarray(tests, dtype=float))
    if len(outcomes) != len(tests):
        raise ValueError("outcomes and tests are not aligned")
    keep = np.flatnonzero(~_reject_mask(outcomes))
    level = outcomes[0].level if outcomes else float("nan")
    return ConfidenceSet(tests[keep], keep, level, len(tests), provenance)


@dataclass(frozen=True, eq=False)
class Projection1D:
    axis: int
    values: np.ndarray  # coordinate of each tested point, ascending
    statistic: np.ndarray
    reject: np.ndarray
    critical: float
    edges: np.ndarray
    tested: np.ndarray  # per-bin counts
    retained: np.ndarray

    @property
    def ruled_out_bins(self) -> np.ndarray:
        """Nonempty bins in which every tested point was rejected."""
        return (self.tested > 0) & (self.retained == 0)

    @property
    def constrained(self) -> bool:
        return bool(np.any(self.ruled_out_bins))


def _axis_range(col, bounds):
    if bounds is not None:
        return float(bounds[0]), float(bounds[1])
    lo, hi = float(np.min(col)), float(np.max(col))
    return (lo, hi) if hi > lo else (lo - 0.5, hi + 0.5)


def project_1d(tests, outcomes, axis: int, bins: int = DEFAULT_BINS, bounds=None) -> Projection1D:
    """Statistic against one coordinate, plus per-bin retention counts."""
    tests = np.atleast_2d(np.asarray(tests, dtype=float))
    col = tests[:, axis]
    stat = np.array([o.statistic for o in outcomes])
    rej = _reject_mask(outcomes)
    crit = outcomes[0].critical if outcomes else float("nan")
    rng = _axis_range(col, bounds)
    tested, edges = np.histogram(col, bins=bins, range=rng)
    retained, _ = np.histogram(col[~rej], bins=edges)
    order = np.argsort(col, kind="stable")
    return Projection1D(axis, col[order], stat[order], rej[order], crit, edges, tested, retained)


@dataclass(frozen=True, eq=False)
class Projection2D:
    axes: tuple
    edges: tuple  # (edges along axes[0], edges along axes[1])
    tested: np.ndarray  # (bins_i, bins_j)
    retained: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.tested == 0

    @property
    def proportion(self) -> np.ndarray:
        """Retained fraction per bin; NaN marks bins with no tested point."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.tested > 0, self.retained / np.maximum(self.tested, 1), np.nan)


def project_2d(tests, outcomes, axes, bins=DEFAULT_BINS, bounds=None) -> Projection2D:
    """Bin two coordinates and count tested and retained points per bin.

    ``bounds`` is an optional pair of (lo, hi) ranges, one per axis; points
    on an upper edge fall in the last bin.
    """
    tests = np.atleast_2d(np.asarray(tests, dtype=float))
    i, j = axes
    bins = (bins, bins) if np.isscalar(bins) else tuple(bins)
    if min(bins) < 1:
        raise ValueError("need at least one bin per axis")
    bounds = bounds or (None, None)
    rng = [_axis_range(tests[:, i], bounds[0]), _axis_range(tests[:, j], bounds[1])]
    rej = _reject_mask(outcomes)
    tested, ei, ej = np.histogram2d(tests[:, i], tests[:, j], bins=bins, range=rng)
    retained, _, _ = np.histogram2d(tests[~rej, i], tests[~rej, j], bins=[ei, ej])
    return Projection2D((i, j), (ei, ej), tested.astype(int), retained.astype(int))


def write_confidence_set(cs: ConfidenceSet, path, names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k"] + list(names))
        for k, u in zip(cs.indices, cs.retained):
            w.writerow([int(k)] + [fmt(v) for v in u])


def read_confidence_set(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    idx = np.array([int(r[0]) for r in rows], dtype=int)
    vals = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), len(header) - 1)
    return header[1:], idx, vals


def write_projection_1d(proj: Projection1D, path, name=""):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name or f"u{proj.axis}", "statistic", "reject", "critical"])
        for v, s, r in zip(proj.values, proj.statistic, proj.reject):
            w.writerow([fmt(v), fmt(s), int(r), fmt(proj.critical)])


def write_projection_2d(proj: Projection2D, path, names=("", "")):
    """Long-format bins: one row per (i, j) bin with its edges and counts."""
    ei, ej = proj.edges
    ni = names[0] or f"u{proj.axes[0]}"
    nj = names[1] or f"u{proj.axes[1]}"
    prop = proj.proportion
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{ni}_lo", f"{ni}_hi", f"{nj}_lo", f"{nj}_hi", "tested", "retained", "proportion"])
        for a in range(len(ei) - 1):
            for b in range(len(ej) - 1):
                w.writerow(
                    [
                        fmt(ei[a]), fmt(ei[a + 1]), fmt(ej[b]), fmt(ej[b + 1]),
                        int(proj.tested[a, b]), int(proj.retained[a, b]),
                        "empty" if np.isnan(prop[a, b]) else fmt(prop[a, b]),
                    ]
                )
