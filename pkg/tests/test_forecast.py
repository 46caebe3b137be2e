import numpy as np
import pytest

from ftsfactors import (
    CurvePanel,
    FactorForecaster,
    ForecastConfig,
    Grid,
    expanding_window_eval,
    extract_factors,
    fit_score_model,
    fourier_basis,
)
from ftsfactors.simulate import SimConfig, generate_panel, replication_seed


def score_driven_panel(seed, n=80, p=6, coef=0.6, noise=0.0, scale=2.0):
    """Panel whose factor curves live exactly in the leading Fourier span."""
    rng = np.random.default_rng(seed)
    G = 16
    grid = Grid.uniform(G)
    basis = fourier_basis(grid, 2)
    scores = np.zeros((n, 2))
    innov = rng.normal(size=(n, 2))
    for t in range(1, n):
        scores[t] = coef * scores[t - 1] + innov[t]
    factor = scores @ basis  # (n, G)
    loading = np.linalg.qr(rng.normal(size=(p, 1)))[0]
    values = scale * loading[:, 0][None, :, None] * factor[:, None, :]
    if noise:
        values = values + noise * rng.normal(size=(n, p, G))
    return CurvePanel(values, grid), loading, scores


class TestExtractFactors:
    def test_identity_loadings_return_panel(self):
        rng = np.random.default_rng(0)
        panel = CurvePanel(rng.normal(size=(5, 3, 7)), Grid.uniform(7))
        factors = extract_factors(panel, np.eye(3))
        np.testing.assert_array_equal(factors, panel.values)

    def test_exact_recovery_in_noiseless_model(self):
        rng = np.random.default_rng(1)
        G, p, r, n = 9, 5, 2, 12
        grid = Grid.uniform(G)
        K = np.linalg.qr(rng.normal(size=(p, r)))[0]
        X = rng.normal(size=(n, r, G))
        panel = CurvePanel(np.einsum("pr,nrg->npg", K, X), grid)
        np.testing.assert_allclose(extract_factors(panel, K), X, atol=1e-10)

    def test_average_loading(self):
        rng = np.random.default_rng(2)
        p = 4
        panel = CurvePanel(rng.normal(size=(6, p, 5)), Grid.uniform(5))
        K = np.full((p, 1), 1 / np.sqrt(p))
        factors = extract_factors(panel, K)
        np.testing.assert_allclose(
            factors[:, 0, :], panel.values.mean(axis=1) * np.sqrt(p), atol=1e-12
        )

    def test_rejects_non_orthonormal(self):
        panel = CurvePanel(np.zeros((3, 2, 4)), Grid.uniform(4))
        with pytest.raises(ValueError):
            extract_factors(panel, np.ones((2, 1)))


class TestFitScoreModel:
    def test_recovers_var1_coefficient(self):
        grid = Grid.uniform(16)
        basis = fourier_basis(grid, 2)
        config = ForecastConfig(n_scores=2, max_order=3)
        good_coef = 0
        good_order = 0
        n_seeds = 20
        for seed in range(n_seeds):
            rng = np.random.default_rng(seed)
            n = 2000
            scores = np.zeros((n, 2))
            innov = rng.normal(size=(n, 2))
            for t in range(1, n):
                scores[t] = 0.6 * scores[t - 1] + innov[t]
            curve = scores @ basis
            model = fit_score_model(curve, grid, config)
            good_order += model.order_ == 1
            if model.order_ == 1:
                good_coef += np.max(np.abs(model.coef_[0] - 0.6 * np.eye(2))) < 0.05
        assert good_order >= 18
        assert good_coef >= 18

    def test_white_noise_forecast_near_zero(self):
        rng = np.random.default_rng(3)
        grid = Grid.uniform(12)
        basis = fourier_basis(grid, 2)
        scores = rng.normal(size=(1500, 2))
        curve = scores @ basis
        model = fit_score_model(curve, grid, ForecastConfig(n_scores=2, max_order=2))
        prediction = model.predict_curve(1)
        assert np.max(np.abs(prediction)) < 0.2

    def test_constant_scores_forecast_constant(self):
        grid = Grid.uniform(10)
        curve = np.full((30, 10), 2.5)
        model = fit_score_model(curve, grid, ForecastConfig(n_scores=1, max_order=2))
        np.testing.assert_allclose(model.predict_curve(3), 2.5, atol=1e-8)

    def test_requires_enough_observations(self):
        grid = Grid.uniform(8)
        with pytest.raises(ValueError):
            fit_score_model(
                np.zeros((6, 8)), grid, ForecastConfig(n_scores=5, max_order=3)
            )


class TestReconstructionIdentity:
    def test_perfect_scores_reconstruct_curves(self):
        # deterministic AR(1) scores in the basis span, identity loadings:
        # the fitted pipeline predicts the next curve exactly
        grid = Grid.uniform(14)
        basis = fourier_basis(grid, 1)
        n, p = 40, 3
        scores = 0.8 ** np.arange(n + 1)
        curves = scores[:, None] * basis[0][None, :]
        values = np.tile(curves[:n, None, :], (1, p, 1))
        factors = extract_factors(CurvePanel(values, grid), np.eye(p))
        config = ForecastConfig(n_scores=1, max_order=1)
        for j in range(p):
            model = fit_score_model(factors[:, j, :], grid, config)
            np.testing.assert_allclose(
                model.predict_curve(1), curves[n], atol=1e-10
            )


class TestFactorForecaster:
    def test_fit_predict_shapes(self):
        panel, _, _ = score_driven_panel(0, noise=0.05)
        fc = FactorForecaster(horizon=1, n_scores=3, max_order=2, n_factors=1,
                              proj_dim=3).fit(panel)
        prediction = fc.predict()
        assert prediction.shape == (panel.n_series, panel.n_points)

    def test_consistency_on_deterministic_scores(self):
        # noiseless rank-1 panel with deterministic first-order score decay:
        # the refit pipeline predicts the next curve to float precision
        rng = np.random.default_rng(7)
        G, p = 16, 6
        grid = Grid.uniform(G)
        basis = fourier_basis(grid, 1)
        loading = np.linalg.qr(rng.normal(size=(p, 1)))[0]
        for n in (25, 50):
            scores = 5.0 * 0.9 ** np.arange(n + 1)
            curves = scores[:, None] * basis[0][None, :]
            values = loading[:, 0][None, :, None] * curves[:, None, :]
            train = CurvePanel(values[:n], grid)
            fc = FactorForecaster(horizon=1, n_scores=1, max_order=1, n_factors=1,
                                  proj_dim=2).fit(train)
            err = np.max(np.abs(fc.predict() - values[n]))
            assert err <= 1e-6

    def test_constant_in_time_panel_predicts_its_pattern(self):
        rng = np.random.default_rng(9)
        grid = Grid.uniform(11)
        pattern = rng.normal(size=(4, 11))
        values = np.tile(pattern[None, :, :], (25, 1, 1))
        # break perfect constancy so the autocovariances are not all zero
        values = values + 1e-9 * rng.normal(size=values.shape)
        panel = CurvePanel(values, grid)
        fc = FactorForecaster(horizon=1, n_scores=2, max_order=1, n_factors=1,
                              weight="identity").fit(panel)
        np.testing.assert_allclose(fc.predict(), pattern, atol=1e-6)

    def test_sparse_full_cardinality_matches_plain(self):
        cfg = SimConfig(n_obs=60, n_series=8, n_factors=2, factor_scale=3.0,
                        seed=replication_seed(5, 0))
        panel, _ = generate_panel(cfg, Grid.uniform(15))
        plain = FactorForecaster(horizon=1, n_factors=2, proj_dim=4,
                                 random_state=1).fit(panel).predict()
        sparse = FactorForecaster(horizon=1, n_factors=2, proj_dim=4, sparse=True,
                                  thresholds=0.0, cardinality=None,
                                  random_state=1).fit(panel).predict()
        np.testing.assert_allclose(sparse, plain, atol=1e-8 * np.max(np.abs(plain)))


class TestExpandingWindow:
    def test_oracle_has_zero_errors(self):
        panel, _, _ = score_driven_panel(1, n=30)
        report = expanding_window_eval(
            panel, ForecastConfig(horizon=1, train_len=20), method="oracle"
        )
        assert report.mape == 0.0 and report.mspe == 0.0

    def test_constant_prediction_errors(self):
        grid = Grid.uniform(5)
        values = np.full((12, 2, 5), 3.0)
        values[-1] = 5.0  # last target differs from the training mean
        panel = CurvePanel(values, grid)
        report = expanding_window_eval(
            panel, ForecastConfig(horizon=1, train_len=11), method="mean"
        )
        assert report.mape == pytest.approx(2.0)
        assert report.mspe == pytest.approx(4.0)

    def test_normalization_matches_definition(self):
        panel, _, _ = score_driven_panel(2, n=28, noise=0.1)
        config = ForecastConfig(horizon=2, train_len=20)
        report = expanding_window_eval(panel, config, method="mean")
        n_splits = panel.n_obs - config.horizon - config.train_len + 1
        assert len(report.per_split) == n_splits
        total = sum(row["mae"] for row in report.per_split)
        assert report.mape == pytest.approx(total / n_splits)

    def test_metrics_invariant_to_series_permutation(self):
        panel, _, _ = score_driven_panel(3, n=30, noise=0.2)
        perm = np.random.default_rng(0).permutation(panel.n_series)
        permuted = CurvePanel(panel.values[:, perm, :], panel.grid)
        cfg = ForecastConfig(horizon=1, train_len=22)
        a = expanding_window_eval(panel, cfg, method="mean")
        b = expanding_window_eval(permuted, cfg, method="mean")
        assert a.mape == pytest.approx(b.mape) and a.mspe == pytest.approx(b.mspe)

    def test_factor_beats_mean_on_factor_panel(self):
        wins = 0
        for seed in range(8):
            cfg = SimConfig(n_obs=150, n_series=12, n_factors=1, factor_scale=2.0,
                            ar_coef=0.7, n_basis=12, scenario=1,
                            seed=replication_seed(77, seed))
            panel, _ = generate_panel(cfg, Grid.uniform(21))
            fc_cfg = ForecastConfig(horizon=1, train_len=120, n_scores=4, max_order=2)
            factor = expanding_window_eval(
                panel, fc_cfg, max_lag=2, method="factor",
                n_factors=1, proj_dim=5, random_state=seed,
            )
            mean = expanding_window_eval(panel, fc_cfg, method="mean")
            wins += factor.mspe < mean.mspe
        assert wins >= 6

    def test_report_roundtrip(self):
        panel, _, _ = score_driven_panel(4, n=26)
        report = expanding_window_eval(
            panel, ForecastConfig(horizon=1, train_len=22), method="mean"
        )
        doc = report.to_dict()
        assert doc["method"] == "mean"
        assert len(doc["per_split"]) == len(report.per_split)

    def test_train_len_bounds_checked(self):
        panel, _, _ = score_driven_panel(5, n=20)
        with pytest.raises(ValueError):
            expanding_window_eval(
                panel, ForecastConfig(horizon=5, train_len=16), method="mean"
            )
