"""Input validation helpers shared by the estimator classes and functions."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .curves import CurvePanel, Grid

PanelLike = Union[CurvePanel, np.ndarray]


def as_panel(X: PanelLike, grid: Optional[Grid] = None) -> CurvePanel:
    """Coerce input to a :class:`CurvePanel`.

    Accepts a panel as-is, or a 3-d array of shape (n_obs, n_series, n_points)
    together with an optional grid (defaults to a uniform grid on [0, 1]).
    """
    if isinstance(X, CurvePanel):
        if grid is not None and grid != X.grid:
            raise ValueError("panel carries a different grid than the one supplied")
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 3:
        raise ValueError("expected a CurvePanel or a 3-d array (time, series, grid)")
    if grid is None:
        grid = Grid.uniform(arr.shape[2])
    return CurvePanel(arr, grid)


def check_orthonormal(K: np.ndarray, tol: float = 1e-8, name: str = "loadings") -> np.ndarray:
    """Validate that the columns of ``K`` are orthonormal to ``tol``."""
    arr = np.asarray(K, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array")
    gram = arr.T @ arr
    if np.max(np.abs(gram - np.eye(arr.shape[1]))) > tol:
        raise ValueError(f"{name} must have orthonormal columns (tolerance {tol:g})")
    return arr


def check_weight_kind(kind: str) -> str:
    if kind not in ("projected", "identity", "diagonal"):
        raise ValueError(
            f"unknown weight kind {kind!r}; expected 'projected', 'identity' or 'diagonal'"
        )
    return kind
