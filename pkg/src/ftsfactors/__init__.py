"""Factor models for high-dimensional functional time series."""

from .autocov import LagAutocov, functional_threshold, hs_norm_matrix, lag_autocov
from .curves import CurvePanel, Grid, center_panel, hs_norm, l2_norm, trapezoid_weights
from .estimator import (
    FactorEstimate,
    FactorModel,
    SignalMatrix,
    VarimaxResult,
    WeightSpec,
    eigenvalue_ratios,
    estimate_rank,
    make_projection,
    signal_matrix,
    signal_matrix_from_autocov,
    subspace_distance,
    sym_eigen,
    varimax,
    weight_at,
)
from .exceptions import ConfigError, NumericalError
from .forecast import (
    FactorForecaster,
    ForecastConfig,
    ForecastReport,
    ScoreForecaster,
    expanding_window_eval,
    extract_factors,
    fit_score_model,
)
from .simulate import (
    GroundTruth,
    SimConfig,
    fourier_basis,
    generate_factors,
    generate_loading,
    generate_noise,
    generate_panel,
    replication_seed,
)
from .sparse import (
    CvConfig,
    SparseFactorModel,
    SparsePcaConfig,
    cv_cardinality,
    cv_cardinality_curve,
    cv_threshold,
    cv_threshold_curve,
    default_threshold_grid,
    entrywise_hs_norms,
    fold_blocks,
    plugin_threshold,
    sparse_pca,
    sparse_pca_objective,
    thresholded_signal_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "CurvePanel",
    "Grid",
    "center_panel",
    "hs_norm",
    "l2_norm",
    "trapezoid_weights",
    "LagAutocov",
    "lag_autocov",
    "hs_norm_matrix",
    "functional_threshold",
    "WeightSpec",
    "SignalMatrix",
    "FactorEstimate",
    "FactorModel",
    "VarimaxResult",
    "make_projection",
    "weight_at",
    "signal_matrix",
    "signal_matrix_from_autocov",
    "sym_eigen",
    "eigenvalue_ratios",
    "estimate_rank",
    "subspace_distance",
    "varimax",
    "ConfigError",
    "NumericalError",
    "CvConfig",
    "SparseFactorModel",
    "SparsePcaConfig",
    "cv_cardinality",
    "cv_cardinality_curve",
    "cv_threshold",
    "cv_threshold_curve",
    "default_threshold_grid",
    "entrywise_hs_norms",
    "fold_blocks",
    "plugin_threshold",
    "sparse_pca",
    "sparse_pca_objective",
    "thresholded_signal_matrix",
    "FactorForecaster",
    "ForecastConfig",
    "ForecastReport",
    "ScoreForecaster",
    "expanding_window_eval",
    "extract_factors",
    "fit_score_model",
    "GroundTruth",
    "SimConfig",
    "fourier_basis",
    "generate_factors",
    "generate_loading",
    "generate_noise",
    "generate_panel",
    "replication_seed",
    "__version__",
]
