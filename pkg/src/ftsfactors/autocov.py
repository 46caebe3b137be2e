"""Sample lag-k autocovariance kernels of a curve panel and hard functional thresholding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CurvePanel, Grid, _frozen_array


@dataclass(frozen=True)
class LagAutocov:
    """Sample lag-k autocovariance of a curve panel.

    Attributes
    ----------
    lag : int
        The lag k >= 0.
    kernels : ndarray of shape (p, p, G, G)
        Entry (i, j, g, h) holds the kernel value of series pair (i, j) at
        grid points (u_g, v_h).
    grid : Grid
        Shared sampling grid.
    n_used : int
        Number of lagged products averaged (n - k); the divisor of the estimator.
    """

    lag: int
    kernels: np.ndarray
    grid: Grid
    n_used: int

    def __post_init__(self):
        if self.lag < 0:
            raise ValueError("lag must be nonnegative")
        if self.n_used < 1:
            raise ValueError("n_used must be at least 1")
        arr = np.asarray(self.kernels, dtype=float)
        G = self.grid.n_points
        if arr.ndim != 4 or arr.shape[0] != arr.shape[1] or arr.shape[2:] != (G, G):
            raise ValueError("kernels must have shape (p, p, G, G) matching the grid")
        if not np.all(np.isfinite(arr)):
            raise ValueError("autocovariance kernels must be finite")
        object.__setattr__(self, "kernels", _frozen_array(arr))

    @property
    def n_series(self) -> int:
        return self.kernels.shape[0]


def lag_autocov(panel: CurvePanel, lag: int) -> LagAutocov:
    """Sample lag-k autocovariance kernels of ``panel``.

    Entry (i, j) at (u_g, v_h) is

        (n - k)^{-1} sum_{t=1}^{n-k} (Y_{t+k,i}(u_g) - mean_i(u_g))
                                     (Y_{t,j}(v_h) - mean_j(v_h)),

    with the mean curve taken over the full sample.  Lag-0 kernels are
    symmetrized under the simultaneous (i, j) swap and (u, v) transpose to
    suppress floating-point asymmetry from the blocked matrix product.
    """
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    n = panel.n_obs
    if lag >= n:
        raise ValueError(
            f"lag {lag} needs at least {lag + 1} observations, panel has {n}"
        )
    p, G = panel.n_series, panel.n_points
    centered = panel.values - panel.values.mean(axis=0)[None, :, :]
    m = n - lag
    lead = centered[lag:].reshape(m, p * G)
    trail = centered[:m].reshape(m, p * G)
    flat = lead.T @ trail / m
    kernels = flat.reshape(p, G, p, G).transpose(0, 2, 1, 3)
    if lag == 0:
        kernels = (kernels + kernels.transpose(1, 0, 3, 2)) / 2.0
    return LagAutocov(lag=lag, kernels=kernels, grid=panel.grid, n_used=m)


def hs_norm_matrix(acov: LagAutocov) -> np.ndarray:
    """Entrywise Hilbert-Schmidt norms of the autocovariance kernels.

    Returns an (p, p) array whose (i, j) entry is the HS norm of kernel (i, j).
    """
    w = acov.grid.quad_weights
    sq = np.einsum("ijgh,g,h->ij", acov.kernels**2, w, w)
    return np.sqrt(np.maximum(sq, 0.0))


def functional_threshold(acov: LagAutocov, threshold: float) -> LagAutocov:
    """Hard functional thresholding of autocovariance entries.

    Entry (i, j) is kept unchanged when its Hilbert-Schmidt norm is >= the
    threshold (ties kept) and replaced by the zero kernel otherwise.
    """
    if not threshold >= 0:
        raise ValueError("threshold must be nonnegative")
    keep = hs_norm_matrix(acov) >= threshold
    kernels = acov.kernels * keep[:, :, None, None]
    return LagAutocov(lag=acov.lag, kernels=kernels, grid=acov.grid, n_used=acov.n_used)
