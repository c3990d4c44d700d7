"""Synthetic ground truth: a cheap forward model, ensembles and observations.

Each cell's response is a constant plus a few exponentiated-quadratic
ridge functions of the unit-scaled parameters,

    f_c(v) = base_c + slope_c * v_0 + sum_r w_cr * exp(-(a_cr . v - b_cr)**2),

with coefficients drawn from a generator keyed on the model seed and the
cell id. On "monotone" cells the ridges ignore ``v_0`` and ``slope_c > 0``,
so the output increases with the first parameter there.

Observations are the response at the true parameter plus independent
Gaussian noise of variance ``meas_var + delta2`` per cell.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import ObservationSet, ParameterSpace, TrainingSet, sample_test_parameters
from .fleet import PredictionTable
from .grid import MatchedGrid, RegularGrid, SpaceTimePoint


def grid_for_cells(m: int, time_count: int = 1) -> RegularGrid:
    """A lat-lon grid holding exactly ``m`` cells per time step."""
    rows = max(d for d in range(1, int(math.isqrt(m)) + 1) if m % d == 0)
    cols = m // rows
    return RegularGrid(
        lat_origin=-45.0, lat_step=min(1.0, 90.0 / rows), lat_count=rows,
        lon_origin=-90.0, lon_step=min(1.0, 270.0 / cols), lon_count=cols,
        time_origin=0, time_step=43200, time_count=time_count,
    )


def default_space(p: int = 3) -> ParameterSpace:
    return ParameterSpace(
        tuple(f"theta{i}" for i in range(p)), tuple(0.0 for _ in range(p)), tuple(1.0 for _ in range(p))
    )


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    space: ParameterSpace
    grid: RegularGrid
    u_star: tuple | None = None  # drawn uniformly from the box when None
    delta2: float = 0.0
    meas_var: object = 0.0  # scalar, per-cell array, or (lo, hi) uniform range
    n_members: int = 20
    n_ridges: int = 3
    amplitude: float = 0.08
    monotone_fraction: float = 0.5
    active_fraction: float = 1.0  # cells that respond to the parameters
    inactive_scale: float = 0.05  # response amplitude elsewhere, relative
    n_outliers: int = 0
    outlier_shift: float = 10.0  # in units of sqrt(meas_var + delta2)
    missing_fraction: float = 0.0
    design: str = "lhs"
    seed: int = 0  # forward model, design and truth
    noise_seed: int | None = None  # observation noise; defaults to seed
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.delta2 < 0:
            raise ValueError("delta2 must be nonnegative")

    @property
    def matched(self) -> MatchedGrid:
        if "matched" not in self._cache:
            self._cache["matched"] = MatchedGrid.identity(self.grid.points())
        return self._cache["matched"]

    @property
    def cells(self) -> list:
        return self.matched.sim_points

    def truth(self) -> np.ndarray:
        if self.u_star is not None:
            u = np.asarray(self.u_star, dtype=float)
            self.space.validate(u)
            return u
        rng = np.random.default_rng([self.seed, 7])
        return self.space.from_unit(rng.uniform(size=self.space.dim))

    def meas_var_field(self) -> np.ndarray:
        m = len(self.cells)
        mv = self.meas_var
        if isinstance(mv, tuple) and len(mv) == 2:
            rng = np.random.default_rng([self.seed, 11])
            out = rng.uniform(mv[0], mv[1], size=m)
        else:
            out = np.broadcast_to(np.asarray(mv, dtype=float), (m,)).copy()
        if np.any(out < 0):
            raise ValueError("measurement variance must be nonnegative")
        return out

    def coefficients(self):
        if "coef" not in self._cache:
            self._cache["coef"] = _coefficients(self)
        return self._cache["coef"]


def _cell_key(seed, cell: SpaceTimePoint) -> int:
    h = hashlib.blake2b(f"synthetic|{seed}|{cell.cell_id()}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def _coefficients(spec: SyntheticSpec):
    p, R = spec.space.dim, spec.n_ridges
    cells = spec.cells
    m = len(cells)
    base = np.empty(m)
    slope = np.zeros(m)
    w = np.empty((m, R))
    a = np.empty((m, R, p))
    b = np.empty((m, R))
    monotone = np.zeros(m, dtype=bool)
    for c, cell in enumerate(cells):
        rng = np.random.default_rng(_cell_key(spec.seed, cell))
        base[c] = rng.uniform(0.1, 0.3)
        w[c] = rng.uniform(-1.0, 1.0, size=R) * spec.amplitude
        a[c] = rng.normal(0.0, 1.5, size=(R, p))
        b[c] = rng.uniform(-0.5, 1.5, size=R)
        monotone[c] = rng.uniform() < spec.monotone_fraction
        s = rng.uniform(0.5, 1.5) * spec.amplitude
        if rng.uniform() >= spec.active_fraction:
            w[c] *= spec.inactive_scale
            s *= spec.inactive_scale
        if monotone[c]:
            a[c, :, 0] = 0.0
            slope[c] = s
    return {"base": base, "slope": slope, "w": w, "a": a, "b": b, "monotone": monotone}


def forward_all(spec: SyntheticSpec, u) -> np.ndarray:
    """Response of every cell at one vector ``(m,)`` or many ``(m, K)``."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    v = spec.space.to_unit(np.atleast_2d(u))  # (K, p)
    co = spec.coefficients()
    arg = np.einsum("crp,kp->crk", co["a"], v) - co["b"][:, :, None]
    out = co["base"][:, None] + co["slope"][:, None] * v[None, :, 0]
    out = out + np.einsum("cr,crk->ck", co["w"], np.exp(-arg * arg))
    return out[:, 0] if single else out


def forward(spec: SyntheticSpec, x: SpaceTimePoint, u) -> float:
    """Response at one cell."""
    c = spec.matched.index()[x]
    return float(forward_all(spec, np.asarray(u, dtype=float))[c])


def forward_gradient(spec: SyntheticSpec, x: SpaceTimePoint, u) -> np.ndarray:
    """Analytic derivative of :func:`forward` with respect to ``u``."""
    c = spec.matched.index()[x]
    co = spec.coefficients()
    v = spec.space.to_unit(np.asarray(u, dtype=float))
    arg = co["a"][c] @ v - co["b"][c]
    dv = -2.0 * (co["w"][c] * arg * np.exp(-arg * arg)) @ co["a"][c]
    dv[0] += co["slope"][c]
    return dv / spec.space.ranges


@dataclass(frozen=True, eq=False)
class Truth:
    u_star: np.ndarray
    delta2: float
    zeta: np.ndarray  # noiseless response at u_star, grid order
    outliers: tuple
    missing: tuple
    seed: int
    noise_seed: int

    def to_dict(self) -> dict:
        return {
            "u_star": self.u_star.tolist(),
            "delta2": self.delta2,
            "outliers": [c.cell_id() for c in self.outliers],
            "missing": [c.cell_id() for c in self.missing],
            "seed": self.seed,
            "noise_seed": self.noise_seed,
        }


def generate(spec: SyntheticSpec):
    """Return ``(TrainingSet, ObservationSet, Truth)`` for ``spec``."""
    cells = spec.cells
    m = len(cells)
    u_star = spec.truth()
    noise_seed = spec.seed if spec.noise_seed is None else spec.noise_seed

    design = sample_test_parameters(spec.space, spec.n_members, seed=spec.seed + 1, strategy=spec.design)
    train = TrainingSet(spec.space, spec.matched, design, forward_all(spec, design).T)

    zeta = forward_all(spec, u_star)
    mv = spec.meas_var_field()
    sd = np.sqrt(mv + spec.delta2)
    rng = np.random.default_rng([noise_seed, 1])
    z = zeta + sd * rng.standard_normal(m)

    pick = np.random.default_rng([noise_seed, 2])
    outl = np.sort(pick.choice(m, size=spec.n_outliers, replace=False)) if spec.n_outliers else np.array([], int)
    z[outl] += spec.outlier_shift * sd[outl]
    n_missing = int(round(spec.missing_fraction * m))
    rest = np.setdiff1d(np.arange(m), outl)
    miss = np.sort(pick.choice(rest, size=n_missing, replace=False)) if n_missing else np.array([], int)
    z[miss] = np.nan

    obs = ObservationSet(spec.matched, z, mv)
    truth = Truth(
        u_star, float(spec.delta2), zeta,
        tuple(cells[i] for i in outl), tuple(cells[i] for i in miss),
        spec.seed, noise_seed,
    )
    return train, obs, truth


def oracle_table(spec: SyntheticSpec, tests) -> PredictionTable:
    """Prediction table from the exact forward model (zero emulator variance)."""
    tests = np.atleast_2d(np.asarray(tests, dtype=float))
    mean = forward_all(spec, tests)
    return PredictionTable(tuple(spec.cells), tests, mean, np.zeros_like(mean))


def write_truth(truth: Truth, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")

