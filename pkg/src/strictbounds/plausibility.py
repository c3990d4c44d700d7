"""Chi-square plausibility test for each test parameter vector."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .align import align
from .data import fmt
from .errors import DomainError

DEFAULT_LEVEL = 0.05


@dataclass(frozen=True)
class TestOutcome:
    k: int
    statistic: float
    critical: float
    reject: bool
    df: int
    level: float


def standardized_residuals(resid, var_emu, meas_var, delta2) -> np.ndarray:
    total = var_emu + meas_var + delta2
    if np.any(~(total > 0)):
        raise DomainError("zero total variance at some cell")
    return resid / np.sqrt(total)


def _root_sum_squares(column) -> float:
    return math.sqrt(math.fsum((column * column).tolist()))


def implausibility_arrays(resid, var_emu, meas_var, delta2) -> np.ndarray:
    """Statistic for every column of ``(m, K)`` arrays, summed in row order."""
    if delta2 < 0:
        raise DomainError("delta2 must be nonnegative")
    if resid.shape[0] == 0:
        raise DomainError("the retained grid is empty")
    std = standardized_residuals(resid, var_emu, np.asarray(meas_var)[:, None], delta2)
    return np.array([_root_sum_squares(std[:, k]) for k in range(std.shape[1])])


def implausibility(k, preds, obs, mstar, delta2) -> float:
    """Root-sum-square of standardised residuals of test vector ``k``."""
    a = align(preds, obs, mstar)
    return float(
        implausibility_arrays(a.residual[:, [k]], a.var[:, [k]], a.meas_var, delta2)[0]
    )


def critical_value(df: int, level: float = DEFAULT_LEVEL) -> float:
    """Upper ``level`` point of the square root of a chi-square(df) variable."""
    if df < 1:
        raise DomainError("df must be at least 1")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    return float(np.sqrt(stats.chi2.ppf(1.0 - level, df)))


def test_arrays(resid, var_emu, meas_var, delta2, level=DEFAULT_LEVEL) -> list:
    stat = implausibility_arrays(resid, var_emu, meas_var, delta2)
    df = resid.shape[0]
    crit = critical_value(df, level)
    return [
        TestOutcome(k, float(s), crit, bool(s > crit), df, level) for k, s in enumerate(stat)
    ]


def test_all(preds, obs, mstar, delta2, level=DEFAULT_LEVEL) -> list:
    """One outcome per test vector, with ``df = |mstar|``."""
    a = align(preds, obs, mstar)
    return test_arrays(a.residual, a.var, a.meas_var, delta2, level)


# keep pytest from collecting the function above as a test
test_all.__test__ = False
test_arrays.__test__ = False
TestOutcome.__test__ = False


def write_outcomes(outcomes, path, tags=None):
    """CSV ``k,statistic,critical,reject`` plus optional constant tag columns."""
    tags = dict(tags or {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "statistic", "critical", "reject"] + list(tags))
        for o in outcomes:
            w.writerow(
                [o.k, fmt(o.statistic), fmt(o.critical), int(o.reject)]
                + [tags[t] for t in tags]
            )


def read_outcomes(path, level=DEFAULT_LEVEL, df=0) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TestOutcome(int(r["k"]), float(r["statistic"]), float(r["critical"]), r["reject"] == "1", df, level)
        for r in rows
    ]
