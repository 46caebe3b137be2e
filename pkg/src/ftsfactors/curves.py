"""Functional-data substrate: sampling grids, curve panels, quadrature and norms.

Every functional object in the package lives on one shared grid of abscissae,
so integrals over the curve domain reduce to weighted sums and all estimators
become finite matrix computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np


def trapezoid_weights(points: Sequence[float]) -> np.ndarray:
    """Quadrature weights of the composite trapezoid rule on ``points``.

    Parameters
    ----------
    points : array-like of shape (G,)
        Strictly increasing abscissae, G >= 2.

    Returns
    -------
    ndarray of shape (G,)
        Nonnegative weights summing to ``points[-1] - points[0]``.  The rule
        integrates any affine function exactly.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 2:
        raise ValueError("grid points must be a 1-d sequence of length >= 2")
    if not np.all(np.isfinite(pts)):
        raise ValueError("grid points must be finite")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("grid points must be strictly increasing")
    weights = np.empty_like(pts)
    weights[0] = (pts[1] - pts[0]) / 2.0
    weights[-1] = (pts[-1] - pts[-2]) / 2.0
    weights[1:-1] = (pts[2:] - pts[:-2]) / 2.0
    return weights


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Shared sampling grid of the curve domain with quadrature weights.

    Attributes
    ----------
    points : ndarray of shape (G,)
        Strictly increasing abscissae.
    quad_weights : ndarray of shape (G,)
        Trapezoid quadrature weights; they sum to the domain length.
    """

    points: np.ndarray
    quad_weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if self.quad_weights is None:
            weights = trapezoid_weights(pts)
        else:
            weights = np.asarray(self.quad_weights, dtype=float)
        if np.any(np.diff(pts) <= 0) or pts.size < 2:
            raise ValueError("grid points must be strictly increasing with G >= 2")
        if weights.shape != pts.shape:
            raise ValueError("quad_weights must match points in shape")
        if np.any(weights < 0):
            raise ValueError("quad_weights must be nonnegative")
        span = pts[-1] - pts[0]
        if abs(weights.sum() - span) > 1e-12 * max(span, 1.0):
            raise ValueError("quad_weights must sum to the domain length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "quad_weights", _frozen_array(weights))

    @classmethod
    def uniform(cls, n_points: int = 51, start: float = 0.0, stop: float = 1.0) -> "Grid":
        """Uniform grid of ``n_points`` abscissae on ``[start, stop]``."""
        if n_points < 2:
            raise ValueError("a grid needs at least two points")
        return cls(np.linspace(start, stop, n_points))

    @property
    def n_points(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.quad_weights, other.quad_weights)
        )


def l2_norm(curve: np.ndarray, grid: Grid) -> float:
    """L2 norm of a curve sampled on ``grid``: sqrt(sum_g w_g f(u_g)^2)."""
    values = np.asarray(curve, dtype=float)
    if values.shape != (grid.n_points,):
        raise ValueError(
            f"curve has {values.shape} values but the grid has {grid.n_points} points"
        )
    return float(np.sqrt(np.sum(grid.quad_weights * values**2)))


def hs_norm(kernel: np.ndarray, grid: Grid) -> float:
    """Hilbert-Schmidt norm of a bivariate kernel sampled on ``grid`` x ``grid``."""
    values = np.asarray(kernel, dtype=float)
    if values.shape != (grid.n_points, grid.n_points):
        raise ValueError(
            f"kernel has shape {values.shape} but the grid has {grid.n_points} points"
        )
    w = grid.quad_weights
    return float(np.sqrt(np.einsum("gh,g,h->", values**2, w, w)))


@dataclass(frozen=True)
class CurvePanel:
    """Panel of ``n_series`` curves observed at ``n_obs`` time points.

    Attributes
    ----------
    values : ndarray of shape (n_obs, n_series, n_points)
        Curve value at (time, series, grid point).
    grid : Grid
        The shared sampling grid.
    """

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise ValueError("panel values must be a 3-d array (time, series, grid)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("panel must contain at least one curve")
        if arr.shape[2] != self.grid.n_points:
            raise ValueError(
                f"panel has {arr.shape[2]} grid values per curve but the grid "
                f"has {self.grid.n_points} points"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("panel values must be finite")
        object.__setattr__(self, "values", _frozen_array(arr))

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return self.values.shape[2]

    def take(self, indices: Sequence[int]) -> "CurvePanel":
        """Sub-panel at the given time indices (order preserved)."""
        return CurvePanel(self.values[np.asarray(indices, dtype=int)], self.grid)


def center_panel(panel: CurvePanel) -> Tuple[CurvePanel, np.ndarray]:
    """Remove the per-series time-mean curve from every observation.

    Returns
    -------
    centered : CurvePanel
        Panel whose per-series mean curve is zero.
    mean_curves : ndarray of shape (n_series, n_points)
        The removed mean curves, for later reconstruction.
    """
    if panel.n_obs < 1:
        raise ValueError("cannot center an empty panel")
    mean_curves = panel.values.mean(axis=0)
    centered = panel.values - mean_curves[None, :, :]
    return CurvePanel(centered, panel.grid), mean_curves
