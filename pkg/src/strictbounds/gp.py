"""Single-cell Gaussian-process emulator.

Constant mean, anisotropic exponential covariance

    k(u, u') = amplitude2 * exp(-sqrt(sum_i (u_i - u'_i)**2 / l_i**2))

plus a diagonal nugget. Hyperparameters are trained by maximising the log
marginal likelihood with L-BFGS-B in the unconstrained coordinates
``(beta0, log amplitude2, log l_1, ..., log l_p, log nugget)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DomainError, FitError, NotPositiveDefinite

FORMAT_VERSION = 1
LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Hyperparameters:
    beta0: float
    amplitude2: float
    length_scales: tuple
    nugget: float = 0.0

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.length_scales))
        object.__setattr__(self, "length_scales", ls)
        if not self.amplitude2 > 0:
            raise DomainError(f"amplitude2 must be positive, got {self.amplitude2}")
        if any(not v > 0 for v in ls):
            raise DomainError(f"length scales must be positive, got {ls}")
        if not self.nugget >= 0:
            raise DomainError(f"nugget must be nonnegative, got {self.nugget}")

    @property
    def dim(self) -> int:
        return len(self.length_scales)

    def to_vector(self) -> np.ndarray:
        """Optimiser coordinates; a zero nugget maps to ``-inf``."""
        with np.errstate(divide="ignore"):
            return np.concatenate(
                [
                    [self.beta0, np.log(self.amplitude2)],
                    np.log(self.length_scales),
                    [np.log(self.nugget)],
                ]
            )

    @classmethod
    def from_vector(cls, theta) -> "Hyperparameters":
        theta = np.asarray(theta, dtype=float)
        return cls(
            beta0=float(theta[0]),
            amplitude2=float(np.exp(theta[1])),
            length_scales=tuple(np.exp(theta[2:-1])),
            nugget=float(np.exp(theta[-1])),
        )

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "amplitude2": self.amplitude2,
            "length_scales": list(self.length_scales),
            "nugget": self.nugget,
        }

    @classmethod
    def from_dict(cls, d) -> "Hyperparameters":
        return cls(d["beta0"], d["amplitude2"], tuple(d["length_scales"]), d["nugget"])


def _as_2d(u, dim=None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[None, :] if dim is None or u.shape[0] == dim else u[:, None]
    if dim is not None and u.shape[1] != dim:
        raise DomainError(f"expected {dim} input dimensions, got {u.shape[1]}")
    return u


def _check_lengths(length_scales) -> np.ndarray:
    ls = np.asarray(length_scales, dtype=float)
    if np.any(~(ls > 0)):
        raise DomainError(f"length scales must be positive, got {ls}")
    return ls


def scaled_distance(a, b, length_scales) -> np.ndarray:
    """Matrix of ``sqrt(sum_i (a_i - b_i)**2 / l_i**2)``."""
    ls = _check_lengths(length_scales)
    a = _as_2d(a, ls.size) / ls
    b = _as_2d(b, ls.size) / ls
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    return np.sqrt(np.maximum(sq, 0.0))


def kernel(u, v, hyper: Hyperparameters) -> float:
    """Exponential covariance between two parameter vectors."""
    ls = _check_lengths(hyper.length_scales)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.shape != ls.shape:
        raise DomainError("dimension mismatch between inputs and length scales")
    r = np.sqrt(np.sum(((u - v) / ls) ** 2))
    return float(hyper.amplitude2 * np.exp(-r))


def cross_covariance(a, b, hyper: Hyperparameters) -> np.ndarray:
    return hyper.amplitude2 * np.exp(-scaled_distance(a, b, hyper.length_scales))


def gram_matrix(inputs, hyper: Hyperparameters) -> np.ndarray:
    """Noise-free Gram matrix built from exact pairwise differences."""
    x = _as_2d(inputs, hyper.dim)
    ls = _check_lengths(hyper.length_scales)
    diff = (x[:, None, :] - x[None, :, :]) / ls
    return hyper.amplitude2 * np.exp(-np.sqrt(np.sum(diff * diff, axis=-1)))


class _LikelihoodWorkspace:
    """Caches squared coordinate differences of one training set."""

    def __init__(self, inputs, outputs):
        self.x = np.asarray(inputs, dtype=float)
        self.y = np.asarray(outputs, dtype=float)
        self.n, self.p = self.x.shape
        diff = self.x[:, None, :] - self.x[None, :, :]
        self.sq = np.ascontiguousarray(np.moveaxis(diff * diff, -1, 0))
        self.evaluations = 0

    def evaluate(self, theta):
        """Return (log marginal likelihood, gradient) at ``theta``."""
        self.evaluations += 1
        theta = np.asarray(theta, dtype=float)
        beta0 = theta[0]
        a2 = np.exp(theta[1])
        inv_l2 = np.exp(-2.0 * theta[2:-1])
        g = np.exp(theta[-1])

        s = np.tensordot(inv_l2, self.sq, axes=1)
        d = np.sqrt(s)
        c = a2 * np.exp(-d)
        k = c.copy()
        k[np.diag_indices_from(k)] += g
        try:
            chol = scipy.linalg.cholesky(k, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None

        r = self.y - beta0
        alpha = scipy.linalg.cho_solve((chol, True), r, check_finite=False)
        value = (
            -0.5 * r @ alpha
            - np.sum(np.log(np.diag(chol)))
            - 0.5 * self.n * LOG_2PI
        )

        kinv = scipy.linalg.cho_solve((chol, True), np.eye(self.n), check_finite=False)
        w = np.outer(alpha, alpha) - kinv
        wc = w * c
        grad = np.empty_like(theta)
        grad[0] = alpha.sum()
        grad[1] = 0.5 * wc.sum()
        # dK/dlog l_i = c * sq_i / (l_i^2 d); zero where d == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(d > 0.0, wc / d, 0.0)
        grad[2:-1] = 0.5 * inv_l2 * np.tensordot(self.sq, h, axes=([1, 2], [0, 1]))
        grad[-1] = 0.5 * g * np.trace(w)
        return float(value), grad


def log_marginal_likelihood(hyper: Hyperparameters, inputs, outputs):
    """Gaussian log marginal likelihood and its gradient.

    The gradient is taken with respect to ``(beta0, log amplitude2,
    log l_1..l_p, log nugget)``. The nugget must be strictly positive for
    its log-coordinate to exist; a zero nugget gives a zero last entry.

    Raises
    ------
    NotPositiveDefinite
        If the Gram matrix plus nugget cannot be Cholesky-factorised.
    """
    x = _as_2d(inputs, hyper.dim)
    ws = _LikelihoodWorkspace(x, outputs)
    theta = hyper.to_vector()
    zero_nugget = not np.isfinite(theta[-1])
    if zero_nugget:
        theta[-1] = -np.inf
    with np.errstate(over="ignore"):
        value, grad = ws.evaluate(theta)
    if zero_nugget:
        grad[-1] = 0.0
    return value, grad


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 5
    seed: int = 0
    maxiter: int = 200
    # per-parameter ranges used to bound the length scales; data ranges if None
    param_ranges: tuple | None = None
    nugget_lower: float = 1e-10
    nugget_init: float = 1e-6  # relative to output variance
    amplitude_bounds: tuple = (1e-8, 1e4)  # relative to output variance
    length_bounds: tuple = (1e-2, 1e2)  # relative to parameter range

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["param_ranges"] is not None:
            d["param_ranges"] = list(d["param_ranges"])
        d["amplitude_bounds"] = list(d["amplitude_bounds"])
        d["length_bounds"] = list(d["length_bounds"])
        return d


@dataclass(frozen=True, eq=False)
class CellEmulator:
    """A trained GP for one grid cell; immutable once built."""

    hyper: Hyperparameters
    inputs: np.ndarray
    outputs: np.ndarray
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_hyper(cls, hyper, inputs, outputs, info=None) -> "CellEmulator":
        x = np.array(_as_2d(inputs, hyper.dim), dtype=float)
        y = np.array(outputs, dtype=float)
        if x.shape[0] < 2 or y.shape != (x.shape[0],):
            raise DomainError("need at least two training points with matching outputs")
        k = gram_matrix(x, hyper)
        k[np.diag_indices_from(k)] += hyper.nugget
        try:
            chol = scipy.linalg.cholesky(k, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None
        alpha = scipy.linalg.cho_solve((chol, True), y - hyper.beta0)
        for arr in (x, y, chol, alpha):
            arr.setflags(write=False)
        return cls(hyper, x, y, chol, alpha, dict(info or {}))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def to_dict(self, include_inputs=True) -> dict:
        d = {
            "format_version": FORMAT_VERSION,
            "hyper": self.hyper.to_dict(),
            "outputs": self.outputs.tolist(),
            "info": self.info,
        }
        if include_inputs:
            d["inputs"] = self.inputs.tolist()
        return d

    @classmethod
    def from_dict(cls, d, inputs=None) -> "CellEmulator":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported emulator format {d.get('format_version')!r}")
        if inputs is None:
            inputs = d["inputs"]
        return cls.from_hyper(
            Hyperparameters.from_dict(d["hyper"]), inputs, d["outputs"], d.get("info")
        )


def predict(emu: CellEmulator, u):
    """Predictive mean and variance at one or many parameter vectors.

    A 1-D ``u`` returns two floats; a ``(k, p)`` array returns two arrays.
    The variance includes the nugget and is clipped below at zero.
    """
    u_arr = np.asarray(u, dtype=float)
    single = u_arr.ndim == 1
    x = _as_2d(u_arr, emu.hyper.dim)
    kx = cross_covariance(x, emu.inputs, emu.hyper)
    mean = emu.hyper.beta0 + kx @ emu.alpha
    v = scipy.linalg.solve_triangular(emu.chol, kx.T, lower=True, check_finite=False)
    var = emu.hyper.amplitude2 + emu.hyper.nugget - np.sum(v * v, axis=0)
    var = np.maximum(var, 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def _bounds(x, y, config: FitConfig):
    p = x.shape[1]
    if config.param_ranges is not None:
        ranges = np.asarray(config.param_ranges, dtype=float)
    else:
        ranges = x.max(axis=0) - x.min(axis=0)
    ranges = np.where(ranges > 0, ranges, 1.0)
    scale = float(np.var(y))
    if not scale > 0:
        scale = 1.0
    lo_l, hi_l = config.length_bounds
    lo_a, hi_a = config.amplitude_bounds
    bounds = [(None, None), (np.log(lo_a * scale), np.log(hi_a * scale))]
    bounds += [(np.log(lo_l * r), np.log(hi_l * r)) for r in ranges]
    bounds.append((np.log(config.nugget_lower), np.log(max(scale, config.nugget_lower * 10))))
    return bounds, ranges, scale


def _initial_points(y, ranges, scale, config: FitConfig, rng, bounds):
    p = ranges.size
    first = np.concatenate(
        [
            [np.mean(y), np.log(scale)],
            np.log(ranges),
            [np.log(max(config.nugget_init * scale, config.nugget_lower))],
        ]
    )
    points = [first]
    for _ in range(max(config.restarts, 1) - 1):
        theta = np.concatenate(
            [
                [np.mean(y), np.log(scale) + rng.uniform(-1.0, 1.0)],
                np.log(ranges) + rng.uniform(np.log(0.1), np.log(10.0), size=p),
                [np.log(max(scale * 10 ** rng.uniform(-8.0, -3.0), config.nugget_lower))],
            ]
        )
        points.append(theta)
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    return [np.clip(t, lo, hi) for t in points]


def fit(inputs, outputs, config: FitConfig | None = None) -> CellEmulator:
    """Maximum-likelihood fit with seeded multi-restart L-BFGS-B.

    Raises
    ------
    FitError
        When every restart fails to factorise the Gram matrix.
    """
    config = config or FitConfig()
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(outputs, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or y.shape != (x.shape[0],):
        raise DomainError("fit needs an (n, p) input array with n >= 2 and n outputs")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
        raise DomainError("training data must be finite")

    ws = _LikelihoodWorkspace(x, y)
    bounds, ranges, scale = _bounds(x, y, config)
    rng = np.random.default_rng(config.seed)
    starts = _initial_points(y, ranges, scale, config, rng, bounds)

    best = None
    diagnostics = []
    for i, theta0 in enumerate(starts):
        seen = {"theta": None, "value": -np.inf}

        def objective(theta):
            value, grad = ws.evaluate(theta)
            if value > seen["value"]:
                seen["theta"], seen["value"] = theta.copy(), value
            return -value, -grad

        try:
            res = scipy.optimize.minimize(
                objective,
                theta0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.maxiter},
            )
            status = res.message if isinstance(res.message, str) else str(res.message)
        except NotPositiveDefinite as exc:
            status = f"factorisation failed: {exc}"
        diagnostics.append({"restart": i, "status": status, "lml": seen["value"]})
        if seen["theta"] is None:
            continue
        if best is None or seen["value"] > best[0]:
            best = (seen["value"], seen["theta"])

    if best is None:
        raise FitError("all restarts failed to factorise the Gram matrix", diagnostics)
    info = {
        "lml": float(best[0]),
        "evaluations": ws.evaluations,
        "restarts": len(starts),
    }
    hyper = Hyperparameters.from_vector(best[1])
    return CellEmulator.from_hyper(hyper, x, y, info)
