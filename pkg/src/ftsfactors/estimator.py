"""Loading-space estimation for high-dimensional functional time series.

The estimator integrates weighted quadratic forms of lag-k autocovariance
kernels over the curve domain into a nonnegative-definite ``signal matrix``
whose leading eigenvectors span the factor loading space.  Three weighting
schemes are supported:

``projected``
    A data-driven weight built from a random projection of the lag-0
    covariance, which rescales heterogeneous series.
``identity``
    Homogeneous weights (plain double integral of outer products).
``diagonal``
    Single integral along the diagonal of the domain square (cheapest,
    discards off-diagonal autocovariance information).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .autocov import LagAutocov, lag_autocov
from .curves import CurvePanel, Grid, center_panel
from .exceptions import NumericalError
from .validation import as_panel, check_orthonormal, check_weight_kind

_COND_GUARD = 1e10
_COND_FAIL = 1e14


@dataclass(frozen=True)
class WeightSpec:
    """Weighting scheme used when assembling the signal matrix.

    Attributes
    ----------
    kind : {'projected', 'identity', 'diagonal'}
        Weight family; see the module docstring.
    proj_dim : int
        Dimension q of the random projection (used only when projected).
    seed : int
        Seed of the random projection matrix.
    ridge : float
        Nonnegative ridge added to the projected q x q gram before inversion.
    """

    kind: str = "projected"
    proj_dim: int = 12
    seed: int = 0
    ridge: float = 0.0

    def __post_init__(self):
        check_weight_kind(self.kind)
        if self.proj_dim < 1:
            raise ValueError("proj_dim must be a positive integer")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "proj_dim": self.proj_dim,
            "seed": self.seed,
            "ridge": self.ridge,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSpec":
        return cls(
            kind=data["kind"],
            proj_dim=int(data["proj_dim"]),
            seed=int(data["seed"]),
            ridge=float(data["ridge"]),
        )


def make_projection(n_series: int, proj_dim: int, seed: int) -> np.ndarray:
    """Random projection matrix with i.i.d. standard normal entries.

    Deterministic for a fixed seed.  Raises when the draw is (numerically)
    column rank deficient, which has probability zero.
    """
    if proj_dim < 1:
        raise ValueError("proj_dim must be a positive integer")
    if proj_dim > n_series:
        raise ValueError(
            f"proj_dim ({proj_dim}) cannot exceed the number of series ({n_series})"
        )
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((n_series, proj_dim))
    sv = np.linalg.svd(Q, compute_uv=False)
    if sv[-1] <= 1e-8 * sv[0]:
        raise NumericalError("projection matrix is numerically rank deficient")
    return Q


def _gram_inverse(S_v: np.ndarray, Q: np.ndarray, ridge: float) -> np.ndarray:
    """Inverse of Q^T S_v Q with the ridge guard applied; symmetric output."""
    q = Q.shape[1]
    B = Q.T @ S_v @ Q
    B = (B + B.T) / 2.0
    if ridge > 0:
        B = B + ridge * np.eye(q)
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > _COND_GUARD:
        B = B + (1e-8 * np.trace(B) / q) * np.eye(q)
        cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > _COND_FAIL:
        raise NumericalError(
            "projected weight is singular: the q x q gram of the lag-0 "
            "covariance cannot be inverted even after the ridge guard"
        )
    inv = np.linalg.inv(B)
    return (inv + inv.T) / 2.0


def weight_at(
    v_index: int, acov0: LagAutocov, Q: np.ndarray, ridge: float = 0.0
) -> np.ndarray:
    """Projected weight matrix at grid point ``v_index``.

    Returns Q (Q^T S_v Q + ridge I)^{-1} Q^T with S_v the lag-0 covariance
    matrix at (v, v); the weight depends on the second coordinate only.
    """
    if acov0.lag != 0:
        raise ValueError("weight_at requires the lag-0 autocovariance")
    if not 0 <= v_index < acov0.grid.n_points:
        raise ValueError(f"v_index {v_index} outside the grid")
    S_v = acov0.kernels[:, :, v_index, v_index]
    W = Q @ _gram_inverse(S_v, Q, ridge) @ Q.T
    return (W + W.T) / 2.0


@dataclass(frozen=True)
class SignalMatrix:
    """Integrated weighted quadratic form of autocovariance kernels.

    The column space of this symmetric nonnegative-definite matrix coincides
    with the factor loading space; its rank equals the number of factors in
    the noiseless population version.
    """

    matrix: np.ndarray
    max_lag: int
    weight: WeightSpec
    thresholded: bool = False

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("signal matrix must be square")
        scale = np.max(np.abs(arr)) or 1.0
        if np.max(np.abs(arr - arr.T)) > 1e-8 * scale:
            raise ValueError("signal matrix must be symmetric")
        eigs = np.linalg.eigvalsh(arr)
        if eigs[0] < -1e-8 * max(eigs[-1], 0.0) - 1e-300:
            raise ValueError("signal matrix must be positive semi-definite")
        object.__setattr__(self, "matrix", arr)

    @property
    def n_series(self) -> int:
        return self.matrix.shape[0]


def _assemble_lag(
    kernels: np.ndarray, quad_weights: np.ndarray, kind: str,
    weight_data,
) -> np.ndarray:
    """Quadrature assembly of one lag's contribution to the signal matrix.

    ``weight_data`` is (Q, inv_grams) for the projected weight (with
    inv_grams[h] the inverse of the projected lag-0 gram at grid point h)
    and None otherwise.  The square roots of the quadrature weights are
    folded into both kernel factors, so each product picks up w_g * w_h.
    """
    w = quad_weights
    if kind == "diagonal":
        diag = np.einsum("ijgg->gij", kernels)
        return np.tensordot(diag * w[:, None, None], diag, axes=([0, 2], [0, 2]))
    p = kernels.shape[0]
    root = np.sqrt(w)
    scaled = kernels.transpose(2, 3, 0, 1).copy()  # (G_u, G_v, p, p)
    scaled *= (root[:, None] * root[None, :])[:, :, None, None]
    if kind == "identity":
        flat = np.ascontiguousarray(scaled.transpose(2, 0, 1, 3)).reshape(p, -1)
        return flat @ flat.T
    Q, inv_grams = weight_data
    projected = np.matmul(scaled, Q)                     # (G_u, G_v, p, q)
    weighted = np.matmul(projected, inv_grams[None])     # inv gram varies with v
    left = np.ascontiguousarray(weighted.transpose(2, 0, 1, 3)).reshape(p, -1)
    right = np.ascontiguousarray(projected.transpose(2, 0, 1, 3)).reshape(p, -1)
    return left @ right.T


def _check_autocov_sequence(
    acovs: Sequence[LagAutocov], acov0: Optional[LagAutocov], weight: WeightSpec
) -> None:
    if not acovs:
        raise ValueError("need at least one lagged autocovariance")
    grid = acovs[0].grid
    p = acovs[0].n_series
    for k, acov in enumerate(acovs, start=1):
        if acov.lag != k:
            raise ValueError("autocovariances must carry consecutive lags 1..k0")
        if acov.grid != grid or acov.n_series != p:
            raise ValueError("autocovariances must share one grid and panel width")
    if weight.kind == "projected":
        if acov0 is None:
            raise ValueError("projected weights require the lag-0 autocovariance")
        if acov0.lag != 0:
            raise ValueError("acov0 must have lag 0")
        if acov0.grid != grid or acov0.n_series != p:
            raise ValueError("acov0 must share the grid and panel width")


def _accumulate_signal_matrix(
    acovs, acov0: Optional[LagAutocov], weight: WeightSpec,
    max_lag: int, thresholded: bool,
) -> SignalMatrix:
    """Shared accumulation loop; consumes the autocovariances lazily so
    callers can stream one lag at a time."""
    weight_data = None
    M = None
    grid = None
    for acov in acovs:
        if M is None:
            grid = acov.grid
            p = acov.n_series
            if weight.kind == "projected":
                if weight.proj_dim > p:
                    raise ValueError("proj_dim cannot exceed the number of series")
                Q = make_projection(p, weight.proj_dim, weight.seed)
                s_diag = np.einsum("ijhh->hij", acov0.kernels)
                inv_grams = np.stack(
                    [_gram_inverse(s, Q, weight.ridge) for s in s_diag]
                )
                weight_data = (Q, inv_grams)
            M = np.zeros((p, p))
        M += _assemble_lag(acov.kernels, grid.quad_weights, weight.kind, weight_data)
    if M is None:
        raise ValueError("need at least one lagged autocovariance")
    M = (M + M.T) / 2.0
    return SignalMatrix(M, max_lag=max_lag, weight=weight, thresholded=thresholded)


def signal_matrix_from_autocov(
    acovs: Sequence[LagAutocov],
    acov0: Optional[LagAutocov],
    weight: WeightSpec,
    thresholded: bool = False,
) -> SignalMatrix:
    """Assemble the signal matrix from precomputed autocovariance kernels.

    ``acovs`` must carry lags 1..k0; ``acov0`` (lag 0) is only required for
    the projected weight.  Feeding unmodified kernels reproduces
    :func:`signal_matrix` exactly; feeding thresholded kernels yields the
    regularized variant.
    """
    _check_autocov_sequence(acovs, acov0, weight)
    return _accumulate_signal_matrix(
        acovs, acov0, weight, max_lag=len(acovs), thresholded=thresholded
    )


def signal_matrix(panel: CurvePanel, max_lag: int, weight: WeightSpec) -> SignalMatrix:
    """Signal matrix of a curve panel using lags 1..max_lag.

    Sums, over lags and over the quadrature grid of the domain square, the
    weighted outer products of sample autocovariance kernels.
    """
    if max_lag < 1 or max_lag > panel.n_obs - 2:
        raise ValueError(
            f"max_lag must lie in [1, n_obs - 2]; got {max_lag} with "
            f"{panel.n_obs} observations"
        )
    acov0 = lag_autocov(panel, 0) if weight.kind == "projected" else None
    acovs = [lag_autocov(panel, k) for k in range(1, max_lag + 1)]
    return signal_matrix_from_autocov(acovs, acov0, weight)


def _factored_signal_matrix(
    centered: np.ndarray, grid: Grid, max_lag: int, weight: WeightSpec
) -> np.ndarray:
    """Fast assembly of the signal matrix without materializing kernels.

    Mathematically identical to :func:`signal_matrix` on the centered panel
    (same sums reordered); used in Monte Carlo and cross-validation loops.
    """
    n, p, G = centered.shape
    if max_lag < 1 or max_lag > n - 2:
        raise ValueError("max_lag must lie in [1, n_obs - 2]")
    w = grid.quad_weights
    inv_grams = None
    if weight.kind == "projected":
        if weight.proj_dim > p:
            raise ValueError("proj_dim cannot exceed the number of series")
        Q = make_projection(p, weight.proj_dim, weight.seed)
        s_diag = np.einsum("tih,tjh->hij", centered, centered) / n
        s_diag = (s_diag + s_diag.transpose(0, 2, 1)) / 2.0
        inv_grams = np.stack(
            [_gram_inverse(s_diag[h], Q, weight.ridge) for h in range(G)]
        )
    M = np.zeros((p, p))
    for k in range(1, max_lag + 1):
        m = n - k
        lead = centered[k:]  # (m, p, G)
        trail = centered[:m]
        lead_t = np.ascontiguousarray(lead.transpose(2, 0, 1))  # (G, m, p)
        if weight.kind == "diagonal":
            trail_t = trail.transpose(2, 0, 1)
            gram = np.matmul(trail_t, trail_t.transpose(0, 2, 1))  # (G, m, m)
            mixed = np.matmul(gram, lead_t)  # (G, m, p)
            flat = (lead_t * w[:, None, None]).reshape(G * m, p)
            M += flat.T @ mixed.reshape(G * m, p) / m**2
            continue
        if weight.kind == "identity":
            trail_w = (trail * w[None, None, :]).reshape(m, p * G)
            beta = trail_w @ trail.reshape(m, p * G).T  # (m, m)
        else:
            trail_q = np.matmul(trail.transpose(2, 0, 1), Q)  # (G, m, q)
            tmp = np.matmul(trail_q, inv_grams)  # (G, m, q)
            beta = np.einsum("htq,hsq,h->ts", tmp, trail_q, w)
        mixed = np.matmul(beta, lead_t)  # (G, m, p)
        flat = (lead_t * w[:, None, None]).reshape(G * m, p)
        M += flat.T @ mixed.reshape(G * m, p) / m**2
    return (M + M.T) / 2.0


def sym_eigen(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    The sign of each eigenvector is fixed so that its entry of largest
    absolute value is positive (lowest index decides ties), which makes
    outputs reproducible across LAPACK builds.
    """
    arr = M.matrix if isinstance(M, SignalMatrix) else np.asarray(M, dtype=float)
    arr = (arr + arr.T) / 2.0
    try:
        values, vectors = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    for j in range(vectors.shape[1]):
        lead = np.argmax(np.abs(vectors[:, j]))
        if vectors[lead, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return values, vectors


def eigenvalue_ratios(eigenvalues: np.ndarray) -> np.ndarray:
    """Successive ratios lambda_{j+1} / lambda_j of descending eigenvalues.

    Values at or below 1e-14 of the leading eigenvalue are clamped to that
    floor first, so trailing numerical zeros cannot produce 0/0.
    """
    values = np.asarray(eigenvalues, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need at least two eigenvalues")
    top = values[0]
    if top <= 0:
        return np.ones(values.size - 1)
    clamped = np.maximum(values, 1e-14 * top)
    return clamped[1:] / clamped[:-1]


def estimate_rank(eigenvalues: np.ndarray, max_fraction: float = 0.75) -> int:
    """Ratio-based estimate of the number of factors.

    Returns the smallest j in 1..floor(max_fraction * p) minimizing the
    eigenvalue ratio lambda_{j+1} / lambda_j.
    """
    values = np.asarray(eigenvalues, dtype=float)
    if values.size < 2:
        raise ValueError("rank estimation needs at least two eigenvalues")
    if not 0 < max_fraction < 1:
        raise ValueError("max_fraction must lie in (0, 1)")
    j_max = min(int(np.floor(max_fraction * values.size)), values.size - 1)
    if j_max < 1:
        raise ValueError("max_fraction too small: no candidate ranks to search")
    ratios = eigenvalue_ratios(values)[:j_max]
    return int(np.argmin(ratios)) + 1


def subspace_distance(K1: np.ndarray, K2: np.ndarray) -> float:
    """Distance in [0, 1] between the column spans of two orthonormal matrices.

    Zero iff the spans coincide, one iff they are orthogonal:
    sqrt(1 - tr(K1 K1' K2 K2') / max(r1, r2)).  Evaluated through the
    projection residual ||(I - K K') K_big||_F, which is the same quantity
    without the catastrophic cancellation of the trace form, so distances of
    nearly identical spans resolve down to machine precision.
    """
    A = check_orthonormal(K1, name="K1")
    B = check_orthonormal(K2, name="K2")
    if A.shape[0] != B.shape[0]:
        raise ValueError("K1 and K2 must live in the same ambient dimension")

    def residual_sq(base, other):
        resid = other - base @ (base.T @ other)
        return float(np.sum(resid * resid))

    r1, r2 = A.shape[1], B.shape[1]
    if r1 == r2:
        # average of the two (mathematically equal) residuals keeps the
        # result bitwise symmetric in its arguments
        value = (residual_sq(A, B) + residual_sq(B, A)) / 2.0 / r1
    elif r1 > r2:
        value = residual_sq(B, A) / r1
    else:
        value = residual_sq(A, B) / r2
    return float(np.sqrt(min(max(value, 0.0), 1.0)))


class VarimaxResult(NamedTuple):
    loadings: np.ndarray
    rotation: np.ndarray
    n_iter: int
    converged: bool


def _varimax_criterion(B: np.ndarray) -> float:
    p = B.shape[0]
    sq = B**2
    return float(np.sum(sq**2) / p - np.sum((sq.sum(axis=0) / p) ** 2))


def varimax(
    loadings: np.ndarray, max_iter: int = 500, tol: float = 1e-10
) -> VarimaxResult:
    """Varimax rotation: maximize the summed variance of squared loadings.

    The output equals ``loadings @ R`` for an orthogonal R, so the column
    span is preserved; the criterion is non-decreasing across iterations.
    Column signs follow the largest-absolute-entry-positive convention.
    """
    A = np.asarray(loadings, dtype=float)
    if A.ndim != 2 or A.shape[1] < 1:
        raise ValueError("loadings must be a p x r matrix with r >= 1")
    p, r = A.shape
    R = np.eye(r)
    if r == 1:
        converged = True
        n_iter = 0
    else:
        converged = False
        d_old = 0.0
        n_iter = 0
        for n_iter in range(1, max_iter + 1):
            B = A @ R
            col_sq = np.sum(B**2, axis=0)
            grad = A.T @ (B**3 - B * (col_sq[None, :] / p))
            U, s, Vt = np.linalg.svd(grad)
            R = U @ Vt
            d = float(np.sum(s))
            if d_old > 0 and abs(d - d_old) <= tol * d_old:
                converged = True
                break
            d_old = d
    B = A @ R
    for j in range(r):
        lead = np.argmax(np.abs(B[:, j]))
        if B[lead, j] < 0:
            B[:, j] = -B[:, j]
            R[:, j] = -R[:, j]
    return VarimaxResult(loadings=B, rotation=R, n_iter=n_iter, converged=converged)


@dataclass(frozen=True)
class FactorEstimate:
    """Result document of one loading-space estimation.

    Serializes to a flat JSON-compatible dictionary holding the eigenvalues,
    their successive ratios, the selected number of factors, the orthonormal
    loading matrix (row-major), and the weighting configuration.
    """

    eigenvalues: np.ndarray
    ratios: np.ndarray
    n_factors: int
    loadings: np.ndarray
    weight: WeightSpec
    max_lag: int

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "ratios": [float(v) for v in self.ratios],
            "n_factors": int(self.n_factors),
            "loadings": [[float(v) for v in row] for row in self.loadings],
            "weight": self.weight.to_dict(),
            "max_lag": int(self.max_lag),
            "seed": int(self.weight.seed),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FactorEstimate":
        return cls(
            eigenvalues=np.asarray(data["eigenvalues"], dtype=float),
            ratios=np.asarray(data["ratios"], dtype=float),
            n_factors=int(data["n_factors"]),
            loadings=np.asarray(data["loadings"], dtype=float),
            weight=WeightSpec.from_dict(data["weight"]),
            max_lag=int(data["max_lag"]),
        )


class FactorModel(BaseEstimator):
    """Latent factor estimator for a panel of functional time series.

    Fits the model Y_t = A X_t + noise by eigenanalysis of the integrated
    weighted autocovariance signal matrix; the number of factors is selected
    by the eigenvalue-ratio rule unless fixed through ``n_factors``.

    Parameters
    ----------
    max_lag : int, default=4
        Number of autocovariance lags accumulated into the signal matrix.
    weight : {'projected', 'identity', 'diagonal'}, default='projected'
        Weighting scheme.
    proj_dim : int or None, default=None
        Projection dimension q for the projected weight; ``None`` uses
        min(12, n_series).
    ridge : float, default=0.0
        Extra ridge added to the projected q x q gram before inversion.
    n_factors : int or None, default=None
        Fix the number of factors instead of estimating it.
    max_fraction : float, default=0.75
        The ratio rule searches ranks up to floor(max_fraction * n_series).
    random_state : int, default=0
        Seed of the random projection.

    Attributes
    ----------
    grid_ : Grid
    mean_curves_ : ndarray of shape (n_series, n_points)
    signal_matrix_ : SignalMatrix
    eigenvalues_ : ndarray of shape (n_series,)
    ratios_ : ndarray of shape (n_series - 1,)
    n_factors_ : int
    loadings_ : ndarray of shape (n_series, n_factors_)
        Orthonormal basis of the estimated factor loading space.
    """

    def __init__(
        self,
        max_lag: int = 4,
        weight: str = "projected",
        proj_dim: Optional[int] = None,
        ridge: float = 0.0,
        n_factors: Optional[int] = None,
        max_fraction: float = 0.75,
        random_state: int = 0,
    ):
        self.max_lag = max_lag
        self.weight = weight
        self.proj_dim = proj_dim
        self.ridge = ridge
        self.n_factors = n_factors
        self.max_fraction = max_fraction
        self.random_state = random_state

    def _weight_spec(self, n_series: int) -> WeightSpec:
        q = self.proj_dim if self.proj_dim is not None else min(12, n_series)
        return WeightSpec(
            kind=check_weight_kind(self.weight),
            proj_dim=q,
            seed=self.random_state,
            ridge=self.ridge,
        )

    def fit(self, X, y=None):
        panel = as_panel(X)
        if self.max_lag < 1 or self.max_lag > panel.n_obs - 2:
            raise ValueError(
                f"max_lag={self.max_lag} needs at least {self.max_lag + 2} "
                f"observations, panel has {panel.n_obs}"
            )
        spec = self._weight_spec(panel.n_series)
        centered, mean_curves = center_panel(panel)
        M = _factored_signal_matrix(
            np.asarray(centered.values), panel.grid, self.max_lag, spec
        )
        values, vectors = sym_eigen(M)
        if self.n_factors is not None:
            if not 1 <= self.n_factors <= panel.n_series:
                raise ValueError("n_factors must lie in [1, n_series]")
            r = int(self.n_factors)
        else:
            r = estimate_rank(values, self.max_fraction)
        self.grid_ = panel.grid
        self.mean_curves_ = mean_curves
        self.weight_spec_ = spec
        self.signal_matrix_ = SignalMatrix(M, max_lag=self.max_lag, weight=spec)
        self.eigenvalues_ = values
        self.ratios_ = eigenvalue_ratios(values)
        self.n_factors_ = r
        self.loadings_ = vectors[:, :r]
        return self

    def transform(self, X) -> np.ndarray:
        """Factor curves K' (Y_t - mean) of a panel, shape (n, n_factors_, G)."""
        check_is_fitted(self, "loadings_")
        panel = as_panel(X, self.grid_)
        centered = panel.values - self.mean_curves_[None, :, :]
        return np.einsum("pr,npg->nrg", self.loadings_, centered)

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform(X)

    def inverse_transform(self, factor_curves: np.ndarray) -> np.ndarray:
        """Map factor curves back to the observation space, adding the mean."""
        check_is_fitted(self, "loadings_")
        F = np.asarray(factor_curves, dtype=float)
        return np.einsum("pr,nrg->npg", self.loadings_, F) + self.mean_curves_

    def to_estimate(self) -> FactorEstimate:
        """Bundle the fitted quantities into a serializable document."""
        check_is_fitted(self, "loadings_")
        return FactorEstimate(
            eigenvalues=self.eigenvalues_,
            ratios=self.ratios_,
            n_factors=self.n_factors_,
            loadings=self.loadings_,
            weight=self.weight_spec_,
            max_lag=self.max_lag,
        )
