"""Gross-outlier screening of grid cells before discrepancy estimation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import fmt
from .errors import DomainError
from .grid import MatchedGrid, subset_excluding


def j_metric(mean, var_emu, meas_var, z, gamma) -> float:
    """Standardised distance ``|mean - z| / sqrt(var_emu + meas_var + gamma**2)``."""
    if var_emu < 0 or meas_var < 0 or gamma < 0:
        raise DomainError("variances and gamma must be nonnegative")
    denom = var_emu + meas_var + gamma * gamma
    if not denom > 0:
        raise DomainError("zero total variance in J")
    return abs(mean - z) / np.sqrt(denom)


def half_normal_quantile(p):
    return stats.norm.ppf(0.5 * (1.0 + np.asarray(p, dtype=float)))


def default_threshold(n_cells: int) -> float:
    """Half-normal quantile at ``1 - 1/(2 n_cells)``."""
    return float(half_normal_quantile(1.0 - 1.0 / (2.0 * n_cells)))


def best_fit_index(residual) -> int:
    """Column with the smallest sum of squared residuals (first on ties)."""
    return int(np.argmin(np.sum(residual * residual, axis=0)))


@dataclass(frozen=True, eq=False)
class FilterReport:
    cells: tuple
    min_j: np.ndarray  # NaN where the observation is missing
    reason: tuple  # "", "missing" or "outlier" per cell
    gamma: float
    threshold: float
    best_k: int
    qq_sample: np.ndarray = None

    @property
    def excluded(self) -> np.ndarray:
        return np.array([r != "" for r in self.reason], dtype=bool)

    @property
    def outliers(self) -> list:
        return [c for c, r in zip(self.cells, self.reason) if r == "outlier"]

    @property
    def missing(self) -> list:
        return [c for c, r in zip(self.cells, self.reason) if r == "missing"]

    @property
    def fraction_excluded(self) -> float:
        return float(np.mean(self.excluded)) if self.cells else 0.0

    @property
    def fraction_outliers(self) -> float:
        present = len(self.cells) - len(self.missing)
        return len(self.outliers) / present if present else 0.0

    def mstar(self, grid: MatchedGrid, extra_excluded=()) -> MatchedGrid:
        """Grid minus excluded cells; cells absent from the report are dropped too."""
        reported = set(self.cells)
        drop = {c for c, r in zip(self.cells, self.reason) if r}
        drop |= {c for c in grid.sim_points if c not in reported}
        drop |= set(extra_excluded) & set(grid.sim_points)
        return subset_excluding(grid, drop)

    def qq_data(self):
        """(theoretical half-normal quantiles, sorted sample J at ``best_k``)."""
        sample = np.sort(self.qq_sample)
        n = sample.size
        probs = (np.arange(1, n + 1) - 0.5) / n
        return half_normal_quantile(probs), sample


def find_outliers(preds, obs, gamma=None, threshold=None) -> FilterReport:
    """Flag cells whose J exceeds ``threshold`` for every test vector.

    ``gamma`` defaults to the standard deviation of the residuals at the
    best-fitting test vector; ``threshold`` defaults to
    :func:`default_threshold` of the number of cells in ``preds``.
    """
    cells = tuple(preds.cells)
    obs_idx = obs.grid.index()
    o = np.array([obs_idx[c] for c in cells], dtype=np.intp)
    z = obs.z[o]
    meas = obs.meas_var[o]
    present = ~np.isnan(z)

    resid = preds.mean[present] - z[present, None]
    best_k = best_fit_index(resid) if resid.size else 0
    if gamma is None:
        gamma = float(np.std(resid[:, best_k])) if resid.size else 0.0
    if threshold is None:
        threshold = default_threshold(max(len(cells), 1))
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")

    denom = preds.var[present] + meas[present, None] + gamma * gamma
    if np.any(~(denom > 0)):
        raise DomainError("zero total variance in J")
    j = np.abs(resid) / np.sqrt(denom)
    min_j = np.full(len(cells), np.nan)
    min_j[present] = j.min(axis=1) if j.size else np.nan

    reason = []
    for is_present, mj in zip(present, min_j):
        if not is_present:
            reason.append("missing")
        elif mj > threshold:
            reason.append("outlier")
        else:
            reason.append("")
    qq = j[:, best_k] if j.size else np.empty(0)
    return FilterReport(cells, min_j, tuple(reason), float(gamma), float(threshold), best_k, qq)


def write_report(report: FilterReport, path, qq_path=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "min_J", "reason"])
        for c, mj, r in zip(report.cells, report.min_j, report.reason):
            w.writerow([c.cell_id(), "" if np.isnan(mj) else fmt(mj), r])
    if qq_path is not None:
        theo, sample = report.qq_data()
        with open(qq_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["half_normal_quantile", "sample_J"])
            for a, b in zip(theo, sample):
                w.writerow([fmt(a), fmt(b)])
