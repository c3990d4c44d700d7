"""History-matching style tests calibrated to a fixed level.

The statistic is an order statistic of the per-cell absolute standardised
residuals: either the ``N``-th largest, or the empirical ``(1 - q)``
quantile (``q = 0`` is the maximum, ``q = 0.5`` the median). Critical
values come from simulating the same order statistic of ``|M*|`` standard
half-normal variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .align import align
from .errors import DomainError
from .plausibility import TestOutcome, standardized_residuals

_BATCH_VALUES = 2_000_000


@dataclass(frozen=True)
class HMConfig:
    q: float | None = 0.25
    n_th: int | None = None  # N-th largest; overrides q when set
    level: float = 0.05
    mc_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.n_th is None:
            if self.q is None or not 0.0 <= self.q <= 1.0:
                raise ValueError("q must lie in [0, 1]")
        elif self.n_th < 1:
            raise ValueError("N must be at least 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.mc_samples < 1000:
            raise ValueError("mc_samples must be at least 1000")

    def rank(self, m: int) -> int:
        """1-based ascending rank of the order statistic among ``m`` values."""
        if m < 1:
            raise DomainError("the retained grid is empty")
        if self.n_th is not None:
            if self.n_th > m:
                raise DomainError(f"N = {self.n_th} exceeds the {m} retained cells")
            return m - self.n_th + 1
        # lower (inverted-CDF) empirical quantile at level 1 - q
        j = math.ceil((1.0 - self.q) * m - 1e-9)
        return min(max(j, 1), m)

    def tags(self) -> dict:
        if self.n_th is not None:
            return {"mode": "order", "N": self.n_th, "q": ""}
        return {"mode": "quantile", "N": "", "q": self.q}


def order_statistic(values, rank: int, axis=-1) -> np.ndarray:
    """``rank``-th smallest entry (1-based) along ``axis``."""
    return np.take(np.partition(values, rank - 1, axis=axis), rank - 1, axis=axis)


def hm_statistic_arrays(resid, var_emu, meas_var, delta2, config: HMConfig) -> np.ndarray:
    m = resid.shape[0]
    std = np.abs(standardized_residuals(resid, var_emu, np.asarray(meas_var)[:, None], delta2))
    return order_statistic(std, config.rank(m), axis=0)


def hm_statistic(k, preds, obs, mstar, delta2, config: HMConfig) -> float:
    a = align(preds, obs, mstar)
    return float(hm_statistic_arrays(a.residual[:, [k]], a.var[:, [k]], a.meas_var, delta2, config)[0])


def simulate_null(m: int, config: HMConfig) -> np.ndarray:
    """Order statistic of ``m`` half-normals, ``config.mc_samples`` times.

    Samples are drawn in fixed-size batches with spawned seeds so the result
    depends only on ``(m, config)``.
    """
    rank = config.rank(m)
    rows = max(1, _BATCH_VALUES // m)
    n_batches = -(-config.mc_samples // rows)
    children = np.random.SeedSequence(config.seed).spawn(n_batches)
    out = np.empty(config.mc_samples)
    for b, child in enumerate(children):
        lo = b * rows
        hi = min(lo + rows, config.mc_samples)
        draws = np.abs(np.random.default_rng(child).standard_normal((hi - lo, m)))
        out[lo:hi] = order_statistic(draws, rank, axis=1)
    return out


@lru_cache(maxsize=64)
def hm_critical(m: int, config: HMConfig) -> float:
    """Monte Carlo upper-``level`` point of the null order statistic."""
    if m < 1:
        raise DomainError("m must be at least 1")
    sims = simulate_null(m, config)
    return float(np.quantile(sims, 1.0 - config.level, method="inverted_cdf"))


def hm_test_arrays(resid, var_emu, meas_var, delta2, config: HMConfig) -> list:
    m = resid.shape[0]
    stat = hm_statistic_arrays(resid, var_emu, meas_var, delta2, config)
    crit = hm_critical(m, config)
    return [TestOutcome(k, float(s), crit, bool(s > crit), m, config.level) for k, s in enumerate(stat)]


def hm_test_all(preds, obs, mstar, delta2, config: HMConfig) -> list:
    a = align(preds, obs, mstar)
    return hm_test_arrays(a.residual, a.var, a.meas_var, delta2, config)


hm_test_all.__test__ = False
hm_test_arrays.__test__ = False
