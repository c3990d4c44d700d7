"""Regular latitude-longitude-time grids and nearest-neighbour matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import NoOverlap, UnknownPoint

DEG_TOL = 1e-9
TIME_TOL = 1.0


def wrap_lon(lon: float) -> float:
    """Map a longitude onto [-180, 180)."""
    w = (float(lon) + 180.0) % 360.0 - 180.0
    return -180.0 if w >= 180.0 else w


@dataclass(frozen=True, order=True)
class SpaceTimePoint:
    lat: float
    lon: float
    time: int

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180)")
        if int(self.time) != self.time or self.time < 0:
            raise ValueError(f"time must be a nonnegative integer, got {self.time}")
        object.__setattr__(self, "time", int(self.time))

    def sort_key(self):
        return (self.time, self.lat, self.lon)

    def cell_id(self) -> str:
        return f"{self.lat!r}:{self.lon!r}:{self.time}"

    @classmethod
    def parse(cls, cell_id: str) -> "SpaceTimePoint":
        lat, lon, time = cell_id.split(":")
        return cls(float(lat), float(lon), int(time))


@dataclass(frozen=True)
class RegularGrid:
    lat_origin: float
    lat_step: float
    lat_count: int
    lon_origin: float
    lon_step: float
    lon_count: int
    time_origin: int = 0
    time_step: int = 1
    time_count: int = 1

    def __post_init__(self):
        for name in ("lat_step", "lon_step", "time_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("lat_count", "lon_count", "time_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    def lats(self) -> np.ndarray:
        return self.lat_origin + self.lat_step * np.arange(self.lat_count)

    def lons(self) -> np.ndarray:
        raw = self.lon_origin + self.lon_step * np.arange(self.lon_count)
        return np.array([wrap_lon(v) for v in raw])

    def times(self) -> np.ndarray:
        return self.time_origin + self.time_step * np.arange(self.time_count, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.lat_count * self.lon_count * self.time_count

    def wraps(self) -> bool:
        """True if the longitude axis closes around the globe."""
        return abs(self.lon_step * self.lon_count - 360.0) <= DEG_TOL * self.lon_count

    def points(self) -> list:
        """All cells in (time, lat, lon) lexicographic order."""
        pts = [
            SpaceTimePoint(float(la), float(lo), int(t))
            for t in self.times()
            for la in self.lats()
            for lo in self.lons()
        ]
        return sorted(pts, key=SpaceTimePoint.sort_key)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d) -> "RegularGrid":
        return cls(**d)


@dataclass(frozen=True)
class MatchedGrid:
    """Ordered sim-to-satellite cell pairing.

    ``pairs`` is sorted by the (time, lat, lon) key of the sim point; that
    order is the reduction order for every downstream statistic.
    """

    pairs: tuple
    sim_resolution: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        sims = [s for s, _ in self.pairs]
        if len(set(sims)) != len(sims):
            raise ValueError("a sim cell appears more than once")
        keys = [s.sort_key() for s in sims]
        if keys != sorted(keys):
            raise ValueError("pairs are not in (time, lat, lon) order")

    def __len__(self):
        return len(self.pairs)

    @property
    def sim_points(self) -> list:
        return [s for s, _ in self.pairs]

    @property
    def sat_points(self) -> list:
        return [t for _, t in self.pairs]

    def index(self) -> dict:
        return {s: i for i, (s, _) in enumerate(self.pairs)}

    def to_dict(self) -> dict:
        return {
            "sim_resolution": list(self.sim_resolution),
            "pairs": [
                [[s.lat, s.lon, s.time], [t.lat, t.lon, t.time]] for s, t in self.pairs
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "MatchedGrid":
        pairs = [
            (SpaceTimePoint(*s), SpaceTimePoint(*t)) for s, t in d["pairs"]
        ]
        return cls(tuple(pairs), tuple(d.get("sim_resolution", ())))

    @classmethod
    def identity(cls, points: Iterable[SpaceTimePoint]) -> "MatchedGrid":
        pts = sorted(set(points), key=SpaceTimePoint.sort_key)
        return cls(tuple((p, p) for p in pts))


def _axis_distance(a, b, periodic):
    d = np.abs(np.asarray(a, dtype=float)[:, None] - np.asarray(b, dtype=float)[None, :])
    if periodic:
        d = np.minimum(d, 360.0 - d)
    return d


def _nearest(sim_vals, sat_vals, half_width, tol, periodic):
    """Index of the nearest sat value per sim value, or -1 if too far.

    Ties go to the smaller sat coordinate.
    """
    order = np.argsort(sat_vals, kind="stable")
    sat_sorted = np.asarray(sat_vals)[order]
    d = _axis_distance(sim_vals, sat_sorted, periodic)
    j = np.argmin(d, axis=1)  # first minimum, i.e. smallest coordinate
    best = d[np.arange(len(sim_vals)), j]
    idx = order[j]
    idx[best > half_width + tol] = -1
    return idx


def match_grids(sim: RegularGrid, sat: RegularGrid) -> MatchedGrid:
    """Pair every sim cell with its nearest satellite cell.

    The metric is the per-axis absolute difference (longitude periodic when
    the satellite grid spans the globe). A sim cell is kept only if its
    nearest satellite neighbour lies within half a satellite step, plus a
    small tolerance, along every axis.

    Raises
    ------
    NoOverlap
        When no sim coordinate along some axis has a satellite partner.
    """
    sat_lats, sat_lons, sat_times = sat.lats(), sat.lons(), sat.times()
    periodic = sat.wraps()
    ilat = _nearest(sim.lats(), sat_lats, sat.lat_step / 2, DEG_TOL, False)
    ilon = _nearest(sim.lons(), sat_lons, sat.lon_step / 2, DEG_TOL, periodic)
    itime = _nearest(sim.times(), sat_times, sat.time_step / 2, TIME_TOL, False)
    for axis, idx in (("lat", ilat), ("lon", ilon), ("time", itime)):
        if np.all(idx < 0):
            raise NoOverlap(axis)

    pairs = []
    for a, la in enumerate(sim.lats()):
        if ilat[a] < 0:
            continue
        for b, lo in enumerate(sim.lons()):
            if ilon[b] < 0:
                continue
            for c, t in enumerate(sim.times()):
                if itime[c] < 0:
                    continue
                pairs.append(
                    (
                        SpaceTimePoint(float(la), float(lo), int(t)),
                        SpaceTimePoint(
                            float(sat_lats[ilat[a]]),
                            float(sat_lons[ilon[b]]),
                            int(sat_times[itime[c]]),
                        ),
                    )
                )
    pairs.sort(key=lambda pr: pr[0].sort_key())
    return MatchedGrid(tuple(pairs), (sim.lat_step, sim.lon_step, sim.time_step))


def subset_excluding(m: MatchedGrid, excluded) -> MatchedGrid:
    """Drop the pairs whose sim point is in ``excluded``; order is kept."""
    excluded = set(excluded)
    known = set(m.sim_points)
    unknown = excluded - known
    if unknown:
        raise UnknownPoint(f"{len(unknown)} excluded point(s) not in grid, e.g. {min(unknown)}")
    return MatchedGrid(
        tuple(pr for pr in m.pairs if pr[0] not in excluded), m.sim_resolution
    )
