"""Line up prediction rows and observations on a set of grid cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Aligned:
    cells: tuple
    mean: np.ndarray  # (m, K)
    var: np.ndarray  # (m, K)
    z: np.ndarray  # (m,)
    meas_var: np.ndarray  # (m,)

    @property
    def residual(self) -> np.ndarray:
        return self.mean - self.z[:, None]


def align(preds, obs, mstar) -> Aligned:
    """Rows of ``preds`` and entries of ``obs`` for the cells of ``mstar``.

    ``mstar`` is a MatchedGrid; every one of its cells must have a
    prediction row and a present observation.
    """
    cells = tuple(mstar.sim_points)
    if not cells:
        raise DomainError("the retained grid is empty")
    rows = preds.row_index()
    obs_idx = obs.grid.index()
    try:
        r = np.fromiter((rows[c] for c in cells), dtype=np.intp, count=len(cells))
        o = np.fromiter((obs_idx[c] for c in cells), dtype=np.intp, count=len(cells))
    except KeyError as exc:
        raise DomainError(f"cell {exc.args[0]} has no prediction or observation") from None
    z = obs.z[o]
    if np.any(np.isnan(z)):
        raise DomainError("the retained grid contains cells with missing observations")
    return Aligned(cells, preds.mean[r], preds.var[r], z, obs.meas_var[o])
