"""Maximum-likelihood estimate of the model-discrepancy variance.

For each test vector the Gaussian log likelihood is maximised over the
discrepancy variance with bounded Brent search; the estimate is the
maximiser at the test vector with the largest maximised likelihood.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .align import align
from .data import fmt
from .errors import DomainError, EstimationError, OptError

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class BracketConfig:
    upper_factor: float = 10.0  # upper end = factor * mean squared residual
    expand: float = 10.0
    xatol: float = 1e-10


def gaussian_loglik(resid, base_var, delta2) -> float:
    """Sum over cells of the independent Gaussian log density."""
    s2 = base_var + delta2
    if np.any(~(s2 > 0)):
        raise DomainError("zero total variance in the likelihood")
    return float(np.sum(-0.5 * LOG_2PI - 0.5 * np.log(s2) - 0.5 * resid * resid / s2))


def log_likelihood(k, delta2, preds, obs, mstar) -> float:
    """Log likelihood of test vector ``k`` and discrepancy variance ``delta2``."""
    if delta2 < 0:
        raise DomainError("delta2 must be nonnegative")
    a = align(preds, obs, mstar)
    return gaussian_loglik(a.residual[:, k], a.var[:, k] + a.meas_var, delta2)


def maximize_delta2_arrays(resid, base_var, config: BracketConfig = BracketConfig()):
    """Brent maximiser of :func:`gaussian_loglik` over ``delta2 >= 0``."""
    resid = np.asarray(resid, dtype=float)
    base_var = np.asarray(base_var, dtype=float)
    upper = config.upper_factor * float(np.mean(resid * resid))
    if not upper > 0:
        return 0.0, gaussian_loglik(resid, base_var, 0.0)

    def negll(d):
        v = gaussian_loglik(resid, base_var, d) if d > 0 or np.all(base_var > 0) else -np.inf
        return -v

    best = None
    for attempt in range(2):
        res = minimize_scalar(
            negll, bounds=(0.0, upper), method="bounded", options={"xatol": config.xatol}
        )
        if not np.isfinite(res.fun):
            raise OptError(f"non-finite likelihood inside [0, {upper}]")
        best = (float(res.x), -float(res.fun))
        # bounded Brent stops within about sqrt(eps) relative of an endpoint
        if res.x < upper * (1.0 - 1e-6) - 10 * config.xatol or attempt == 1:
            break
        upper *= config.expand

    if np.all(base_var > 0):
        at_zero = gaussian_loglik(resid, base_var, 0.0)
        if at_zero >= best[1]:
            best = (0.0, at_zero)
    return best


def maximize_delta2(k, preds, obs, mstar, bracket_config: BracketConfig = BracketConfig()):
    """(delta2_k, loglik_k) for test vector ``k``."""
    a = align(preds, obs, mstar)
    return maximize_delta2_arrays(a.residual[:, k], a.var[:, k] + a.meas_var, bracket_config)


@dataclass(frozen=True, eq=False)
class DiscrepancyEstimate:
    delta2: float
    best_k: int
    loglik: float
    per_k_delta2: np.ndarray
    per_k_loglik: np.ndarray

    def to_dict(self) -> dict:
        return {"delta2": self.delta2, "best_k": self.best_k, "loglik": self.loglik}


def estimate_arrays(resid, base_var, config: BracketConfig = BracketConfig()) -> DiscrepancyEstimate:
    """Estimate from ``(m, K)`` residual and base-variance arrays."""
    n_tests = resid.shape[1]
    if n_tests < 1:
        raise EstimationError("no test parameters")
    d2 = np.full(n_tests, np.nan)
    ll = np.full(n_tests, -np.inf)
    for k in range(n_tests):
        try:
            d2[k], ll[k] = maximize_delta2_arrays(resid[:, k], base_var[:, k], config)
        except (OptError, DomainError):
            continue
    if not np.any(np.isfinite(ll)):
        raise EstimationError("likelihood maximisation failed for every test vector")
    k_hat = int(np.argmax(ll))
    return DiscrepancyEstimate(float(d2[k_hat]), k_hat, float(ll[k_hat]), d2, ll)


def estimate(preds, obs, mstar, config: BracketConfig = BracketConfig()) -> DiscrepancyEstimate:
    """Profile over test vectors; ties in likelihood go to the smallest ``k``."""
    a = align(preds, obs, mstar)
    return estimate_arrays(a.residual, a.var + a.meas_var[:, None], config)


def write_estimate(est: DiscrepancyEstimate, json_path, csv_path=None, extra=None):
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({**est.to_dict(), **(extra or {})}, fh, sort_keys=True, indent=1)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "delta2", "loglik"])
            for k, (d, l) in enumerate(zip(est.per_k_delta2, est.per_k_loglik)):
                w.writerow([k, "" if np.isnan(d) else fmt(d), fmt(l)])


def read_estimate(json_path) -> dict:
    with open(json_path, encoding="utf-8") as fh:
        return json.load(fh)
