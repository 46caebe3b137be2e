"""Command-line interface.

Subcommands: simulate, estimate, sparse-estimate, forecast, benchmark.
Each takes a flat ``key = value`` config file (``--config``) plus repeatable
``--set key=value`` overrides; common flags are ``--seed``, ``--out``,
``--reps`` and ``--threads``.  Exit codes: 0 success, 2 config error,
3 data error, 4 numerical failure.  Outputs are byte-reproducible for a
fixed config and seed, and every output directory carries a manifest that
reconstructs the run.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .curves import Grid
from .estimator import FactorModel, estimate_rank, subspace_distance, sym_eigen, varimax
from .exceptions import ConfigError, NumericalError
from .forecast import ForecastConfig, expanding_window_eval
from .io import dump_json, read_grid_csv, read_panel_csv, write_grid_csv, write_panel_csv
from .simulate import SimConfig, generate_panel, replication_seed
from .sparse import (
    CvConfig,
    SparseFactorModel,
    cv_cardinality_curve,
    cv_threshold_curve,
    fold_blocks,
)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_opt_int(text: str) -> Optional[int]:
    stripped = text.strip()
    return None if stripped in ("", "none") else int(stripped)


def _parse_str(text: str) -> str:
    return text.strip()


# key -> (parser, default); None default means the key is required
_SIM_KEYS = {
    "n_obs": (int, 100),
    "n_series": (int, 50),
    "n_factors": (int, 4),
    "strength_exponent": (float, 0.0),
    "factor_scale": (float, 1.0),
    "scenario": (int, 1),
    "common_noise_scale": (float, 0.5),
    "ar_coef": (float, 0.45),
    "innovation_decay": (float, 0.75),
    "n_basis": (int, 50),
    "sparsity": (_parse_str, "none"),
    "sparsity_level": (float, 0.8),
    "grid_points": (int, 51),
}

_ESTIMATOR_KEYS = {
    "panel": (_parse_str, None),
    "grid": (_parse_str, None),
    "max_lag": (int, 4),
    "weight": (_parse_str, "projected"),
    "proj_dim": (_parse_opt_int, None),
    "ridge": (float, 0.0),
    "n_factors": (_parse_opt_int, None),
    "max_fraction": (float, 0.75),
}

_SPECS: Dict[str, Dict[str, tuple]] = {
    "simulate": dict(_SIM_KEYS),
    "estimate": dict(_ESTIMATOR_KEYS, rotate=(_parse_bool, False)),
    "sparse-estimate": dict(
        _ESTIMATOR_KEYS,
        thresholds=(_parse_str, "plugin"),
        threshold_grid=(_parse_float_list, []),
        cardinality=(_parse_str, "cv"),
        cardinality_grid=(_parse_int_list, []),
        cv_folds=(int, 5),
    ),
    "forecast": dict(
        _ESTIMATOR_KEYS,
        max_lag=(int, 2),
        horizons=(_parse_int_list, [1]),
        train_len=(int, 40),
        n_scores=(int, 5),
        max_order=(int, 3),
        sparse=(_parse_bool, False),
        thresholds=(_parse_str, "plugin"),
        cardinality=(_parse_str, "full"),
        baseline=(_parse_bool, True),
        oracle=(_parse_bool, False),
    ),
    "benchmark": dict(
        _SIM_KEYS,
        scale_grid=(_parse_float_list, [1.0]),
        methods=(_parse_str, "projected,identity,diagonal"),
        max_lag=(int, 4),
        proj_dim=(_parse_opt_int, 12),
        ridge=(float, 0.0),
        max_fraction=(float, 0.75),
        thresholds=(_parse_str, "plugin"),
        cardinality=(_parse_str, "cv"),
        cardinality_grid=(_parse_int_list, []),
        cv_folds=(int, 5),
    ),
}


def parse_config_file(path: Path) -> Dict[str, str]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    data: Dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, value = line.split("=", 1)
        data[key.strip()] = value.strip()
    return data


def resolve_options(command: str, raw: Dict[str, str]) -> Dict[str, object]:
    spec = _SPECS[command]
    unknown = sorted(set(raw) - set(spec))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    options: Dict[str, object] = {}
    for key, (parser, default) in spec.items():
        if key in raw:
            try:
                options[key] = parser(raw[key])
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
        elif default is None and key in ("panel", "grid"):
            raise ConfigError(f"config key {key} is required for {command}")
        else:
            options[key] = default
    return options


def _manifest(out_dir: Path, command: str, args, options: Dict[str, object],
              files: List[str]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "reps": args.reps,
        "threads": args.threads,
        "options": {k: v for k, v in sorted(options.items())},
        "files": sorted(files),
    }
    dump_json(manifest, out_dir / "manifest.json")


def _sim_config(options: Dict[str, object], seed: int) -> SimConfig:
    sparsity = options["sparsity"]
    try:
        return SimConfig(
            n_obs=options["n_obs"],
            n_series=options["n_series"],
            n_factors=options["n_factors"],
            strength_exponent=options["strength_exponent"],
            factor_scale=options["factor_scale"],
            scenario=options["scenario"],
            common_noise_scale=options["common_noise_scale"],
            ar_coef=options["ar_coef"],
            innovation_decay=options["innovation_decay"],
            n_basis=options["n_basis"],
            sparsity=None if sparsity == "none" else sparsity,
            sparsity_level=options["sparsity_level"],
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_simulate(args, options: Dict[str, object], out_dir: Path) -> None:
    grid = Grid.uniform(options["grid_points"])
    files = ["grid.csv"]
    write_grid_csv(grid, out_dir / "grid.csv")
    for rep in range(args.reps):
        config = _sim_config(options, replication_seed(args.seed, rep))
        panel, truth = generate_panel(config, grid)
        panel_name = f"panel_{rep + 1:04d}.csv"
        truth_name = f"truth_{rep + 1:04d}.json"
        write_panel_csv(panel, out_dir / panel_name)
        dump_json(truth.to_dict(), out_dir / truth_name)
        files += [panel_name, truth_name]
    _manifest(out_dir, "simulate", args, options, files)


def _load_panel(options: Dict[str, object]):
    grid = read_grid_csv(options["grid"])
    return read_panel_csv(options["panel"], grid)


def cmd_estimate(args, options: Dict[str, object], out_dir: Path) -> None:
    panel = _load_panel(options)
    model = FactorModel(
        max_lag=options["max_lag"],
        weight=options["weight"],
        proj_dim=options["proj_dim"],
        ridge=options["ridge"],
        n_factors=options["n_factors"],
        max_fraction=options["max_fraction"],
        random_state=args.seed,
    )
    try:
        model.fit(panel)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    document = model.to_estimate().to_dict()
    if options["rotate"]:
        rotated = varimax(model.loadings_)
        document["rotated_loadings"] = [
            [float(v) for v in row] for row in rotated.loadings
        ]
        document["rotation_converged"] = bool(rotated.converged)
    dump_json(document, out_dir / "estimate.json")
    _manifest(out_dir, "estimate", args, options, ["estimate.json"])


def _sparse_model(options: Dict[str, object], seed: int) -> SparseFactorModel:
    thresholds = options["thresholds"]
    if thresholds not in ("cv", "plugin"):
        thresholds = _parse_float_list(thresholds)
    cardinality = options["cardinality"]
    if cardinality == "full":
        cardinality = None
    elif cardinality != "cv":
        cardinality = int(cardinality)
    return SparseFactorModel(
        max_lag=options["max_lag"],
        weight=options["weight"],
        proj_dim=options["proj_dim"],
        ridge=options["ridge"],
        n_factors=options["n_factors"],
        max_fraction=options["max_fraction"],
        thresholds=thresholds,
        threshold_grid=options["threshold_grid"] or None,
        cardinality=cardinality,
        cardinality_grid=options["cardinality_grid"] or None,
        cv_folds=options["cv_folds"],
        random_state=seed,
    )


def cmd_sparse_estimate(args, options: Dict[str, object], out_dir: Path) -> None:
    panel = _load_panel(options)
    model = _sparse_model(options, args.seed)
    try:
        model.fit(panel)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    document = {
        "eigenvalues": [float(v) for v in model.eigenvalues_],
        "ratios": [float(v) for v in model.ratios_],
        "n_factors": int(model.n_factors_),
        "loadings": [[float(v) for v in row] for row in model.loadings_],
        "thresholds": [float(v) for v in model.thresholds_],
        "cardinality": int(model.cardinality_),
        "weight": model.weight_spec_.to_dict(),
        "max_lag": int(model.max_lag),
        "seed": int(args.seed),
    }
    dump_json(document, out_dir / "sparse_estimate.json")
    tuning = {
        "fold_boundaries": [
            int(block[0]) for block in fold_blocks(panel.n_obs, options["cv_folds"])
        ],
        "thresholds": [float(v) for v in model.thresholds_],
        "cardinality": int(model.cardinality_),
    }
    if options["thresholds"] == "cv":
        cv = CvConfig(
            folds=options["cv_folds"],
            threshold_grid=options["threshold_grid"] or None,
        )
        curves = {}
        for lag in range(1, options["max_lag"] + 1):
            grid_vals, scores = cv_threshold_curve(panel, lag, cv)
            curves[str(lag)] = {
                "grid": [float(v) for v in grid_vals],
                "scores": [float(v) for v in scores],
            }
        tuning["threshold_curves"] = curves
    if options["cardinality"] == "cv" and options["cardinality_grid"]:
        grid_vals, scores = cv_cardinality_curve(
            panel,
            options["max_lag"],
            model.thresholds_,
            model.n_factors_,
            model.weight_spec_,
            CvConfig(folds=options["cv_folds"],
                     cardinality_grid=options["cardinality_grid"]),
        )
        tuning["cardinality_curve"] = {
            "grid": [int(v) for v in grid_vals],
            "scores": [float(v) for v in scores],
        }
    dump_json(tuning, out_dir / "tuning.json")
    _manifest(out_dir, "sparse-estimate", args, options,
              ["sparse_estimate.json", "tuning.json"])


def cmd_forecast(args, options: Dict[str, object], out_dir: Path) -> None:
    panel = _load_panel(options)
    methods = ["sparse" if options["sparse"] else "factor"]
    if options["baseline"]:
        methods.append("mean")
    if options["oracle"]:
        methods.append("oracle")
    estimator_params = dict(
        proj_dim=options["proj_dim"],
        ridge=options["ridge"],
        n_factors=options["n_factors"],
        max_fraction=options["max_fraction"],
        random_state=args.seed,
    )
    if options["sparse"]:
        thresholds = options["thresholds"]
        if thresholds not in ("cv", "plugin"):
            thresholds = _parse_float_list(thresholds)
        cardinality = options["cardinality"]
        estimator_params["thresholds"] = thresholds
        estimator_params["cardinality"] = (
            None if cardinality == "full" else int(cardinality)
        )
    reports = []
    for horizon in options["horizons"]:
        try:
            config = ForecastConfig(
                horizon=horizon,
                train_len=options["train_len"],
                n_scores=options["n_scores"],
                max_order=options["max_order"],
                sparse=options["sparse"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for method in methods:
            report = expanding_window_eval(
                panel, config, max_lag=options["max_lag"],
                weight=options["weight"], method=method,
                **(estimator_params if method in ("factor", "sparse") else {}),
            )
            reports.append(report.to_dict())
    dump_json({"reports": reports}, out_dir / "forecast.json")
    _manifest(out_dir, "forecast", args, options, ["forecast.json"])


def _benchmark_replication(options: Dict[str, object], methods: List[str],
                           scale: float, master_seed: int, rep: int) -> Dict[str, dict]:
    sim_options = dict(options)
    if options["scenario"] == 3:
        sim_options["common_noise_scale"] = scale
    else:
        sim_options["factor_scale"] = scale
    seed = replication_seed(master_seed, rep)
    config = _sim_config(sim_options, seed)
    grid = Grid.uniform(options["grid_points"])
    panel, truth = generate_panel(config, grid)
    r_true = truth.n_factors
    out: Dict[str, dict] = {}
    for method in methods:
        if method == "sparse":
            model = _sparse_model(
                {**options, "weight": "projected",
                 "threshold_grid": [], "n_factors": r_true},
                seed,
            ).fit(panel)
            values = model.eigenvalues_
            basis = model.loadings_
        else:
            fitted = FactorModel(
                max_lag=options["max_lag"],
                weight=method,
                proj_dim=options["proj_dim"],
                ridge=options["ridge"],
                max_fraction=options["max_fraction"],
                random_state=seed,
            ).fit(panel)
            values = fitted.eigenvalues_
            basis = sym_eigen(fitted.signal_matrix_)[1][:, :r_true]
        rank_hit = estimate_rank(values, options["max_fraction"]) == r_true
        distance = subspace_distance(basis, truth.basis) if truth.basis.size else 1.0
        out[method] = {"rank_hit": bool(rank_hit), "distance": float(distance)}
    return out


def cmd_benchmark(args, options: Dict[str, object], out_dir: Path) -> None:
    methods = [m.strip() for m in options["methods"].split(",") if m.strip()]
    valid = {"projected", "identity", "diagonal", "sparse"}
    if not methods or set(methods) - valid:
        raise ConfigError(f"methods must be a comma list from {sorted(valid)}")
    _sim_config(options, 0)  # validate the design eagerly
    rows = []
    for scale in options["scale_grid"]:
        def run(rep: int) -> Dict[str, dict]:
            return _benchmark_replication(options, methods, scale, args.seed, rep)

        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                results = list(pool.map(run, range(args.reps)))
        else:
            results = [run(rep) for rep in range(args.reps)]
        for method in methods:
            distances = np.array([res[method]["distance"] for res in results])
            hits = np.array([res[method]["rank_hit"] for res in results])
            rows.append({
                "scale": scale,
                "method": method,
                "n_reps": args.reps,
                "freq_correct_rank": float(hits.mean()),
                "mean_distance": float(distances.mean()),
                "se_distance": float(
                    distances.std(ddof=1) / np.sqrt(len(distances))
                ) if len(distances) > 1 else 0.0,
            })
    header = "scale,method,n_reps,freq_correct_rank,mean_distance,se_distance"
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['scale']!r},{row['method']},{row['n_reps']},"
            f"{row['freq_correct_rank']!r},{row['mean_distance']!r},"
            f"{row['se_distance']!r}"
        )
    (out_dir / "benchmark.csv").write_text("\n".join(lines) + "\n")
    _manifest(out_dir, "benchmark", args, options, ["benchmark.csv"])


_HANDLERS: Dict[str, Callable] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "sparse-estimate": cmd_sparse_estimate,
    "forecast": cmd_forecast,
    "benchmark": cmd_benchmark,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftsfactors",
        description="Factor models for high-dimensional functional time series",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", type=Path, default=None,
                         help="flat key = value configuration file")
        sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a single config key")
        sub.add_argument("--seed", type=int, default=0, help="master seed")
        sub.add_argument("--out", type=Path, required=True, help="output directory")
        sub.add_argument("--reps", type=int, default=1,
                         help="number of Monte Carlo replications")
        sub.add_argument("--threads", type=int, default=1,
                         help="worker threads for independent replications")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = parse_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            raw[key.strip()] = value.strip()
        if args.reps < 1:
            raise ConfigError("--reps must be at least 1")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        options = resolve_options(args.command, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        out_dir = args.out
        out_dir.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.command](args, options, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    return 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
