"""Synthetic data generators for benchmarking the factor estimators.

Panels are built as curve_panel = factor_scale * A @ latent_curves + noise,
where the latent factor curves ride a Fourier basis whose coefficients follow
a vector autoregression, and three noise scenarios cover homogeneous white
noise, heteroscedastic series, and an extra weak common factor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .curves import CurvePanel, Grid

logger = logging.getLogger(__name__)

_BURN_IN = 200
_NOISE_BASIS = 20
_COMMON_BASIS = 4

# named sub-streams of the master seed, so individual components can be
# varied while the others stay fixed
_STREAM_LOADING = 1
_STREAM_FACTORS = 2
_STREAM_NOISE = 3
_STREAM_SCALE = 4


def _rng(seed: int, stream: int, extra: Tuple[int, ...] = ()) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, stream) + extra))


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of the simulated data-generating process.

    Attributes
    ----------
    n_obs, n_series, n_factors : int
        Panel length, cross-section width, and number of latent factors.
    strength_exponent : float
        Exponent in [0, 1] controlling factor strength through the loading
        scale p^(-strength_exponent / 2); zero gives pervasive factors.
    factor_scale : float
        Multiplier of the common component (ignored for scenario 3, which
        fixes it at one and varies ``common_noise_scale`` instead).
    scenario : int
        1 = homogeneous white noise, 2 = heteroscedastic noise,
        3 = an extra common white-noise factor with loading one everywhere.
    common_noise_scale : float
        Strength of the scenario-3 extra factor.
    ar_coef : float
        Base of the VAR(1) coefficient matrix (ar_coef^(|l - l'| + 1)).
    innovation_decay : float
        Basis-coefficient innovations have variance index^(-2 * decay).
    n_basis : int
        Number of Fourier basis functions carrying the factor curves.
    sparsity : {None, 'row', 'column'}
        Optional sparsity pattern imposed on the loading matrix; sparse
        nonzero entries are drawn from Uniform[-sqrt(3), sqrt(3)].
    sparsity_level : float
        Fraction of rows (or of entries per column) set to zero.
    seed : int
        Master seed; loading, factor, noise, and scale draws use independent
        sub-streams.
    """

    n_obs: int
    n_series: int
    n_factors: int
    strength_exponent: float = 0.0
    factor_scale: float = 1.0
    scenario: int = 1
    common_noise_scale: float = 0.5
    ar_coef: float = 0.45
    innovation_decay: float = 0.75
    n_basis: int = 50
    sparsity: Optional[str] = None
    sparsity_level: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n_obs < 1 or self.n_series < 1:
            raise ValueError("n_obs and n_series must be positive")
        if not 1 <= self.n_factors <= self.n_series:
            raise ValueError("n_factors must lie in [1, n_series]")
        if not 0 <= self.strength_exponent <= 1:
            raise ValueError("strength_exponent must lie in [0, 1]")
        if self.factor_scale <= 0:
            raise ValueError("factor_scale must be positive")
        if self.scenario not in (1, 2, 3):
            raise ValueError("scenario must be 1, 2 or 3")
        if self.common_noise_scale < 0:
            raise ValueError("common_noise_scale must be nonnegative")
        if not -1 < self.ar_coef < 1:
            raise ValueError("ar_coef must lie in (-1, 1)")
        if self.n_basis < 1:
            raise ValueError("n_basis must be positive")
        if self.sparsity not in (None, "row", "column"):
            raise ValueError("sparsity must be None, 'row' or 'column'")
        if not 0 <= self.sparsity_level <= 1:
            raise ValueError("sparsity_level must lie in [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    """The loading matrix behind a simulated panel and its orthonormal span.

    For scenario 3 the loading matrix carries the extra all-ones column of
    the additional common factor, so ``n_factors`` is one larger than the
    configured number.
    """

    loadings: np.ndarray
    basis: np.ndarray
    n_factors: int

    def __post_init__(self):
        gram = self.basis.T @ self.basis
        if gram.size and np.max(np.abs(gram - np.eye(self.basis.shape[1]))) > 1e-12:
            raise ValueError("basis columns must be orthonormal")

    def to_dict(self) -> dict:
        return {
            "loadings": [[float(v) for v in row] for row in self.loadings],
            "basis": [[float(v) for v in row] for row in self.basis],
            "n_factors": int(self.n_factors),
        }


def fourier_basis(grid: Grid, n_functions: int) -> np.ndarray:
    """The first ``n_functions`` rows of the orthonormal Fourier system.

    Ordering: constant, cos, sin, cos, sin, ... with increasing frequency,
    orthonormal on the grid's domain (grid Gram close to the identity up to
    quadrature error).
    """
    if n_functions < 1:
        raise ValueError("n_functions must be positive")
    a, b = grid.points[0], grid.points[-1]
    span = b - a
    t = (grid.points - a) / span
    rows = np.empty((n_functions, grid.n_points))
    rows[0] = 1.0
    for j in range(1, n_functions):
        freq = (j + 1) // 2
        phase = 2 * np.pi * freq * t
        rows[j] = np.sqrt(2.0) * (np.cos(phase) if j % 2 == 1 else np.sin(phase))
    return rows / np.sqrt(span)


def _span_basis(A: np.ndarray) -> np.ndarray:
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((A.shape[0], 0))
    return u[:, s > 1e-10 * s[0]]


def generate_loading(config: SimConfig) -> GroundTruth:
    """Draw the loading matrix (with optional sparsity) and its span.

    Dense loadings come from Uniform[-sqrt(3) p^(-d/2), sqrt(3) p^(-d/2)]
    with d the strength exponent; sparse designs zero the requested fraction
    of rows (or entries per column) and draw the survivors from
    Uniform[-sqrt(3), sqrt(3)].  Scenario 3 appends the all-ones column.
    """
    p, r = config.n_series, config.n_factors
    designed_rank = r + 1 if config.scenario == 3 else r
    for attempt in range(6):
        rng = _rng(config.seed, _STREAM_LOADING, (attempt,))
        if config.sparsity is None:
            half_width = np.sqrt(3.0) * p ** (-config.strength_exponent / 2.0)
            A = rng.uniform(-half_width, half_width, size=(p, r))
        else:
            A = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(p, r))
            n_zero = int(round(config.sparsity_level * p))
            if config.sparsity == "row":
                rows = rng.choice(p, size=n_zero, replace=False)
                A[rows] = 0.0
            else:
                for col in range(r):
                    idx = rng.choice(p, size=n_zero, replace=False)
                    A[idx, col] = 0.0
        if config.scenario == 3:
            A = np.column_stack([A, np.ones(p)])
        basis = _span_basis(A)
        feasible = config.sparsity != "row" or (
            p - int(round(config.sparsity_level * p)) + (config.scenario == 3)
            >= designed_rank
        )
        if basis.shape[1] == designed_rank or not feasible:
            return GroundTruth(loadings=A, basis=basis, n_factors=designed_rank)
        logger.warning(
            "loading draw %d was rank deficient (%d < %d); redrawing",
            attempt, basis.shape[1], designed_rank,
        )
    raise RuntimeError("could not draw a full-rank loading matrix")


def _var_matrix(config: SimConfig) -> np.ndarray:
    r = config.n_factors
    idx = np.arange(r)
    V = config.ar_coef ** (np.abs(idx[:, None] - idx[None, :]) + 1.0)
    if config.ar_coef == 0:
        V = np.zeros((r, r))
    radius = np.max(np.abs(np.linalg.eigvals(V)))
    if radius >= 1:
        raise ValueError(
            f"VAR coefficient matrix has spectral radius {radius:.3f} >= 1; "
            "lower ar_coef or n_factors"
        )
    return V


def generate_factors(config: SimConfig, grid: Grid) -> np.ndarray:
    """Latent factor curves of shape (n_obs, n_factors, n_points).

    Each Fourier coefficient vector follows a VAR(1) with innovation
    variance index^(-2 * innovation_decay), burnt in from a zero start.
    """
    V = _var_matrix(config)
    rng = _rng(config.seed, _STREAM_FACTORS)
    n, r, nb = config.n_obs, config.n_factors, config.n_basis
    stds = np.arange(1, nb + 1, dtype=float) ** (-config.innovation_decay)
    innov = rng.standard_normal((_BURN_IN + n, nb, r)) * stds[None, :, None]
    states = np.zeros((_BURN_IN + n, nb, r))
    states[0] = innov[0]
    Vt = V.T
    for t in range(1, _BURN_IN + n):
        states[t] = states[t - 1] @ Vt + innov[t]
    phi = fourier_basis(grid, nb)
    return np.einsum("til,ig->tlg", states[_BURN_IN:], phi)


def generate_noise(config: SimConfig, grid: Grid) -> np.ndarray:
    """Idiosyncratic curves of shape (n_obs, n_series, n_points).

    Scenario 1 stacks 20 Fourier components with geometrically decaying
    scales; scenario 2 rescales each series by h_j / 5 with h_j uniform on
    {1..10}; scenario 3 adds a shared white-noise curve on the first four
    basis functions, scaled by ``common_noise_scale``.
    """
    rng = _rng(config.seed, _STREAM_NOISE)
    n, p = config.n_obs, config.n_series
    phi = fourier_basis(grid, _NOISE_BASIS)
    scales = 2.0 ** (-(np.arange(1, _NOISE_BASIS + 1, dtype=float) + 1.0))
    Z = rng.standard_normal((n, p, _NOISE_BASIS)) * scales[None, None, :]
    noise = np.einsum("tpi,ig->tpg", Z, phi)
    if config.scenario == 2:
        h = _rng(config.seed, _STREAM_SCALE).integers(1, 11, size=p)
        noise = noise * (h / 5.0)[None, :, None]
    elif config.scenario == 3:
        shared = rng.standard_normal((n, _COMMON_BASIS))
        common = shared @ phi[:_COMMON_BASIS]
        noise = noise + config.common_noise_scale * common[:, None, :]
    return noise


def generate_panel(
    config: SimConfig, grid: Optional[Grid] = None
) -> Tuple[CurvePanel, GroundTruth]:
    """Simulated curve panel plus the ground truth behind it.

    Scenario 3 fixes the common-component multiplier at one; its factor
    strength is driven by ``common_noise_scale`` instead.
    """
    if grid is None:
        grid = Grid.uniform(51)
    truth = generate_loading(config)
    factors = generate_factors(config, grid)
    noise = generate_noise(config, grid)
    core = truth.loadings[:, : config.n_factors]
    scale = 1.0 if config.scenario == 3 else config.factor_scale
    values = scale * np.einsum("pl,tlg->tpg", core, factors) + noise
    return CurvePanel(values, grid), truth


def replication_seed(master_seed: int, replication: int) -> int:
    """Derived seed for one Monte Carlo replication of a benchmark run."""
    return int(
        np.random.SeedSequence((master_seed, replication)).generate_state(1)[0]
    )
