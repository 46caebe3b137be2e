"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  The Monte Carlo criteria reproduce the scaled-down
benchmark studies and take a while; run with ``pytest -s`` to watch the
progress lines."""

import time

import numpy as np

from ftsfactors import (
    CurvePanel,
    FactorModel,
    ForecastConfig,
    Grid,
    LagAutocov,
    SparseFactorModel,
    SparsePcaConfig,
    WeightSpec,
    expanding_window_eval,
    functional_threshold,
    hs_norm_matrix,
    lag_autocov,
    make_projection,
    signal_matrix,
    signal_matrix_from_autocov,
    sparse_pca,
    sparse_pca_objective,
    subspace_distance,
    sym_eigen,
    varimax,
)
from ftsfactors.cli import main as cli_main
from ftsfactors.simulate import SimConfig, generate_panel, replication_seed


def report(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:>2} [{status}] {name}: {detail}")
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def test_criterion_01_oracle_equivalence():
    """signal_matrix matches a quintuple-loop evaluation of the weighted
    quadrature assembly to 1e-10 absolute."""
    start = time.time()
    rng = np.random.default_rng(11)
    n, p, G, q, k0 = 8, 3, 5, 2, 2
    grid = Grid.uniform(G)
    panel = CurvePanel(rng.normal(size=(n, p, G)), grid)
    weight = WeightSpec(kind="projected", proj_dim=q, seed=7)

    values = panel.values
    mean = values.mean(axis=0)
    w = grid.quad_weights
    Q = make_projection(p, q, seed=7)

    def oracle_autocov(k):
        out = np.zeros((p, p, G, G))
        for i in range(p):
            for j in range(p):
                for g in range(G):
                    for h in range(G):
                        acc = 0.0
                        for t in range(n - k):
                            acc += (values[t + k, i, g] - mean[i, g]) * (
                                values[t, j, h] - mean[j, h]
                            )
                        out[i, j, g, h] = acc / (n - k)
        return out

    acov0 = oracle_autocov(0)
    weights_by_v = []
    for h in range(G):
        B = Q.T @ acov0[:, :, h, h] @ Q
        weights_by_v.append(Q @ np.linalg.inv(B) @ Q.T)
    oracle = np.zeros((p, p))
    for k in range(1, k0 + 1):
        kern = oracle_autocov(k)
        for g in range(G):
            for h in range(G):
                S = kern[:, :, g, h]
                oracle += w[g] * w[h] * S @ weights_by_v[h] @ S.T

    M = signal_matrix(panel, k0, weight).matrix
    error = float(np.max(np.abs(M - oracle)))
    elapsed = time.time() - start
    report(1, "oracle equivalence", error <= 1e-10 and elapsed < 1.0,
           f"max abs error {error:.2e}, {elapsed:.2f}s")


def test_criterion_02_population_rank():
    """Noiseless rank-2 kernels produce a signal matrix with exactly p - 2
    numerically zero eigenvalues and exact span recovery."""
    start = time.time()
    rng = np.random.default_rng(5)
    p, r, G = 6, 2, 21
    grid = Grid.uniform(G)
    A = rng.normal(size=(p, r))
    u = grid.points
    acovs = []
    for k in (1, 2):
        core = A @ rng.normal(size=(r, r)) @ A.T
        curves = np.outer(np.cos((k + 1) * np.pi * u) + 1.5,
                          np.sin(k * np.pi * u) + 2.0)
        kernels = core[:, :, None, None] * curves[None, None]
        acovs.append(LagAutocov(lag=k, kernels=kernels, grid=grid, n_used=10))
    M = signal_matrix_from_autocov(acovs, None, WeightSpec(kind="identity"))
    eigenvalues, vectors = sym_eigen(M)
    tail_ok = bool(np.all(eigenvalues[r:] <= 1e-10 * eigenvalues[0]))
    distance = subspace_distance(np.linalg.qr(A)[0], vectors[:, :r])
    elapsed = time.time() - start
    report(2, "population rank", tail_ok and distance <= 1e-8 and elapsed < 1.0,
           f"tail max {eigenvalues[r:].max():.2e} x leading, distance {distance:.2e}, "
           f"{elapsed:.2f}s")


def test_criterion_03_rank_frequency_trend():
    """Scenario 1, strong factors, p=50, n=100, r=4: the relative frequency
    of recovering the true rank is non-decreasing in the factor scale and
    reaches at least 0.90 at the top of the grid."""
    grid = Grid.uniform(51)
    scales = [0.05, 0.1, 0.15, 0.25, 0.5]
    reps = 100
    freqs = []
    for scale in scales:
        hits = 0
        for rep in range(reps):
            cfg = SimConfig(n_obs=100, n_series=50, n_factors=4,
                            strength_exponent=0.0, factor_scale=scale,
                            scenario=1, seed=replication_seed(300, rep))
            panel, _ = generate_panel(cfg, grid)
            model = FactorModel(max_lag=4, weight="projected", proj_dim=12,
                                random_state=cfg.seed).fit(panel)
            hits += model.n_factors_ == 4
        freqs.append(hits / reps)
    monotone = all(b >= a - 0.05 for a, b in zip(freqs, freqs[1:]))
    top = freqs[-1]
    report(3, "rank recovery trend", monotone and top >= 0.90,
           f"frequencies {freqs} over scales {scales}")


def test_criterion_04_weighting_superiority():
    """Scenario 2 (heteroscedastic), p=50, n=100: mean subspace distance is
    ordered projected < identity < diagonal, each gap above two paired
    standard errors."""
    grid = Grid.uniform(51)
    reps = 100
    distances = {kind: [] for kind in ("projected", "identity", "diagonal")}
    for rep in range(reps):
        cfg = SimConfig(n_obs=100, n_series=50, n_factors=4, factor_scale=0.5,
                        scenario=2, seed=replication_seed(400, rep))
        panel, truth = generate_panel(cfg, grid)
        for kind in distances:
            model = FactorModel(max_lag=4, weight=kind, proj_dim=12,
                                n_factors=4, random_state=cfg.seed).fit(panel)
            distances[kind].append(subspace_distance(model.loadings_, truth.basis))
    arrays = {k: np.asarray(v) for k, v in distances.items()}

    def paired_t(gap):
        return gap.mean() / (gap.std(ddof=1) / np.sqrt(len(gap)))

    gap_pi = arrays["identity"] - arrays["projected"]
    gap_id = arrays["diagonal"] - arrays["identity"]
    t_pi, t_id = paired_t(gap_pi), paired_t(gap_id)
    means = {k: float(v.mean()) for k, v in arrays.items()}
    ordered = means["projected"] < means["identity"] < means["diagonal"]
    report(4, "weighting superiority", ordered and t_pi > 2 and t_id > 2,
           f"means {means}, paired t-stats {t_pi:.1f} and {t_id:.1f}")


def test_criterion_05_sparse_benchmark():
    """Row-sparse design (80% zero rows), Scenario 1, p=100, n=100: the
    thresholding-plus-sparse-PCA estimate beats plain eigenanalysis with a
    mean-distance ratio inside [0.25, 0.75]."""
    grid = Grid.uniform(51)
    reps = 100
    d_plain, d_sparse = [], []
    for rep in range(reps):
        cfg = SimConfig(n_obs=100, n_series=100, n_factors=4, factor_scale=1.0,
                        scenario=1, sparsity="row", sparsity_level=0.8,
                        seed=replication_seed(500, rep))
        panel, truth = generate_panel(cfg, grid)
        plain = FactorModel(max_lag=4, weight="projected", proj_dim=12,
                            n_factors=4, random_state=cfg.seed).fit(panel)
        sparse = SparseFactorModel(
            max_lag=4, weight="projected", proj_dim=12, n_factors=4,
            thresholds="plugin", cardinality="cv",
            cardinality_grid=[10, 20, 40, 100], cv_folds=5,
            random_state=cfg.seed,
        ).fit(panel)
        d_plain.append(subspace_distance(plain.loadings_, truth.basis))
        d_sparse.append(subspace_distance(sparse.loadings_, truth.basis))
    mean_plain = float(np.mean(d_plain))
    mean_sparse = float(np.mean(d_sparse))
    ratio = mean_sparse / mean_plain
    report(5, "sparse benchmark", mean_sparse < mean_plain and 0.25 <= ratio <= 0.75,
           f"mean distance sparse {mean_sparse:.4f} vs plain {mean_plain:.4f}, "
           f"ratio {ratio:.3f}")


def test_criterion_06_sparse_pca_quality():
    """On 50 random 8x8 PSD matrices the greedy solver reaches at least 95%
    of the exhaustive objective (r=1, cardinality 3) and satisfies both
    constraints on every instance."""
    worst = 1.0
    constraints_ok = True
    for seed in range(50):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(8, 8))
        M = A @ A.T
        greedy = sparse_pca(M, SparsePcaConfig(n_components=1, cardinality=3))
        exact = sparse_pca(
            M, SparsePcaConfig(n_components=1, cardinality=3, search="exhaustive")
        )
        worst = min(worst, sparse_pca_objective(M, greedy)
                    / sparse_pca_objective(M, exact))
        unit = abs(float(greedy[:, 0] @ greedy[:, 0]) - 1.0) < 1e-8
        sparse_ok = np.count_nonzero(np.abs(greedy[:, 0]) > 1e-12) <= 3
        constraints_ok = constraints_ok and unit and sparse_ok
    report(6, "sparse PCA quality", worst >= 0.95 and constraints_ok,
           f"worst greedy/exhaustive ratio {worst:.4f}, constraints "
           f"{'all satisfied' if constraints_ok else 'violated'}")


def test_criterion_07_thresholding_laws():
    """Idempotence, support monotonicity, and the zero-threshold identity
    hold exactly on 100 random autocovariance instances."""
    ok = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        panel = CurvePanel(rng.normal(size=(7, 3, 4)), Grid.uniform(4))
        acov = lag_autocov(panel, 1)
        norms = hs_norm_matrix(acov)
        lo, hi = np.quantile(norms, [0.3, 0.7])
        identity = functional_threshold(acov, 0.0)
        ok = ok and np.array_equal(identity.kernels, acov.kernels)
        once = functional_threshold(acov, hi)
        twice = functional_threshold(once, hi)
        ok = ok and np.array_equal(once.kernels, twice.kernels)
        support_hi = hs_norm_matrix(functional_threshold(acov, hi)) > 0
        support_lo = hs_norm_matrix(functional_threshold(acov, lo)) > 0
        ok = ok and bool(np.all(support_lo | ~support_hi))
    report(7, "thresholding operator laws", ok, "100/100 instances exact")


def test_criterion_08_invariance_suite():
    rng = np.random.default_rng(21)
    p, r, G = 6, 2, 15
    grid = Grid.uniform(G)
    u = grid.points
    details = []

    def population_matrix(A, seed):
        gen = np.random.default_rng(seed)
        acovs = []
        for k in (1, 2):
            core = A @ gen.normal(size=(r, r)) @ A.T
            curves = np.outer(np.cos((k + 1) * np.pi * u) + 1.5,
                              np.sin(k * np.pi * u) + 2.0)
            acovs.append(LagAutocov(
                lag=k, kernels=core[:, :, None, None] * curves[None, None],
                grid=grid, n_used=10))
        return signal_matrix_from_autocov(acovs, None, WeightSpec(kind="identity"))

    A = rng.normal(size=(p, r))
    Gamma = rng.normal(size=(r, r)) + 3 * np.eye(r)
    K1 = sym_eigen(population_matrix(A, 9))[1][:, :r]
    K2 = sym_eigen(population_matrix(A @ Gamma, 9))[1][:, :r]
    inv_dist = subspace_distance(K1, K2)
    invariance_ok = inv_dist <= 1e-8
    details.append(f"loading-space invariance {inv_dist:.2e}")

    panel = CurvePanel(rng.normal(size=(12, 5, 6)), Grid.uniform(6))
    perm = np.array([3, 0, 4, 1, 2])
    permuted = CurvePanel(panel.values[:, perm, :], panel.grid)
    equivariance_ok = True
    for kind in ("identity", "diagonal"):
        M = signal_matrix(panel, 2, WeightSpec(kind=kind)).matrix
        M_perm = signal_matrix(permuted, 2, WeightSpec(kind=kind)).matrix
        scale = np.max(np.abs(M))
        equivariance_ok = equivariance_ok and bool(
            np.max(np.abs(M_perm - M[np.ix_(perm, perm)])) <= 1e-10 * scale
        )
        K = sym_eigen(M)[1][:, :2]
        K_perm = sym_eigen(M_perm)[1][:, :2]
        equivariance_ok = equivariance_ok and bool(
            np.max(np.abs(K_perm - K[perm])) <= 1e-8
        )
    details.append(f"permutation equivariance {'ok' if equivariance_ok else 'broken'}")

    K = np.linalg.qr(rng.normal(size=(10, 3)))[0]
    rotated = varimax(K)
    drift = float(np.max(np.abs(K @ K.T - rotated.loadings @ rotated.loadings.T)))
    varimax_ok = drift <= 1e-8
    details.append(f"varimax span drift {drift:.2e}")

    e1 = np.eye(2)[:, :1]
    e2 = np.eye(2)[:, 1:]
    boundary_ok = subspace_distance(e1, e1) == 0.0 and subspace_distance(e1, e2) == 1.0
    details.append("distance boundaries exact" if boundary_ok else "boundaries off")

    report(8, "invariance suite",
           invariance_ok and equivariance_ok and varimax_ok and boundary_ok,
           "; ".join(details))


def test_criterion_09_forecast_sanity():
    """Factor-model prediction beats the per-series historical-mean baseline
    in at least 80% of 50 replications; the sparse variant at full
    cardinality reproduces the plain predictions to 1e-8."""
    wins = 0
    reps = 50
    for rep in range(reps):
        cfg = SimConfig(n_obs=150, n_series=12, n_factors=1, factor_scale=2.0,
                        ar_coef=0.7, n_basis=12, scenario=1,
                        seed=replication_seed(900, rep))
        panel, _ = generate_panel(cfg, Grid.uniform(21))
        fc_cfg = ForecastConfig(horizon=1, train_len=120, n_scores=4, max_order=2)
        factor = expanding_window_eval(
            panel, fc_cfg, max_lag=2, method="factor",
            n_factors=1, proj_dim=5, random_state=rep,
        )
        mean = expanding_window_eval(panel, fc_cfg, method="mean")
        wins += factor.mspe < mean.mspe

    from ftsfactors import FactorForecaster

    cfg = SimConfig(n_obs=80, n_series=8, n_factors=2, factor_scale=3.0,
                    seed=replication_seed(901, 0))
    panel, _ = generate_panel(cfg, Grid.uniform(15))
    plain = FactorForecaster(horizon=1, n_factors=2, proj_dim=4,
                             random_state=1).fit(panel).predict()
    sparse = FactorForecaster(horizon=1, n_factors=2, proj_dim=4, sparse=True,
                              thresholds=0.0, cardinality=None,
                              random_state=1).fit(panel).predict()
    match = float(np.max(np.abs(sparse - plain))) <= 1e-8 * np.max(np.abs(plain))
    report(9, "forecast sanity", wins >= 0.8 * reps and match,
           f"factor model beat the mean baseline in {wins}/{reps} runs; "
           f"sparse-at-full-cardinality match: {match}")


def _run_twice(tmp_path, name, argv):
    out_a = tmp_path / f"{name}_a"
    out_b = tmp_path / f"{name}_b"
    assert cli_main(argv + ["--out", str(out_a)]) == 0
    assert cli_main(argv + ["--out", str(out_b)]) == 0
    files_a = sorted(p.name for p in out_a.iterdir())
    files_b = sorted(p.name for p in out_b.iterdir())
    if files_a != files_b:
        return False
    return all((out_a / f).read_bytes() == (out_b / f).read_bytes() for f in files_a)


def test_criterion_10_cli_determinism(tmp_path):
    """Every CLI subcommand with a fixed seed yields byte-identical outputs
    across two runs."""
    sim_dir = tmp_path / "sim"
    sim_args = [
        "simulate", "--seed", "5", "--reps", "2",
        "--set", "n_obs=30", "--set", "n_series=6", "--set", "n_factors=2",
        "--set", "grid_points=9", "--set", "factor_scale=3.0",
    ]
    assert cli_main(sim_args + ["--out", str(sim_dir)]) == 0
    panel = str(sim_dir / "panel_0001.csv")
    grid = str(sim_dir / "grid.csv")
    results = {
        "simulate": _run_twice(tmp_path, "sim2", sim_args),
        "estimate": _run_twice(tmp_path, "est", [
            "estimate", "--seed", "5",
            "--set", f"panel={panel}", "--set", f"grid={grid}",
            "--set", "max_lag=2", "--set", "proj_dim=3", "--set", "rotate=true",
            "--set", "n_factors=2",
        ]),
        "sparse-estimate": _run_twice(tmp_path, "sparse", [
            "sparse-estimate", "--seed", "5",
            "--set", f"panel={panel}", "--set", f"grid={grid}",
            "--set", "max_lag=2", "--set", "proj_dim=3",
            "--set", "n_factors=2", "--set", "thresholds=plugin",
            "--set", "cardinality=cv", "--set", "cardinality_grid=3,6",
            "--set", "cv_folds=3",
        ]),
        "forecast": _run_twice(tmp_path, "fc", [
            "forecast", "--seed", "5",
            "--set", f"panel={panel}", "--set", f"grid={grid}",
            "--set", "max_lag=2", "--set", "proj_dim=3",
            "--set", "train_len=24", "--set", "n_scores=2",
            "--set", "max_order=1", "--set", "n_factors=2",
            "--set", "oracle=true",
        ]),
        "benchmark": _run_twice(tmp_path, "bench", [
            "benchmark", "--seed", "5", "--reps", "2",
            "--set", "n_obs=40", "--set", "n_series=8", "--set", "n_factors=2",
            "--set", "grid_points=9", "--set", "scale_grid=1.0",
            "--set", "methods=projected,sparse", "--set", "max_lag=2",
            "--set", "proj_dim=3", "--set", "cardinality_grid=4,8",
            "--set", "cv_folds=3",
        ]),
    }
    report(10, "CLI determinism", all(results.values()),
           ", ".join(f"{k}={'ok' if v else 'DIFFERS'}" for k, v in results.items()))
