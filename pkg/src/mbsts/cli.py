"""Command-line front end: simulate, train, forecast, evaluate, report.

A JSON config file supplies defaults; command-line flags win.  Every
artifact directory receives a manifest (seed, config hash, versions,
wall clock) sufficient to reproduce the run.  Exit codes: 0 ok,
2 config error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, bench, forecast as fc, gibbs, ingest, regression, simgen
from .bench import EvalConfig, EvalError
from .gibbs import GibbsError, TrainConfig
from .ingest import IngestError
from .kalman import NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")


def _merged(config, section, overrides):
    out = dict(config.get(section) or {})
    for key, value in overrides.items():
        if value is not None:
            out[key] = value
    return out


def _require(mapping, key, section):
    if key not in mapping or mapping[key] is None:
        raise ConfigError(f"missing required setting {section}.{key}")
    return mapping[key]


def _write_manifest(out_dir, command, resolved, seed, t0):
    """Record run provenance; merges with a manifest the artifact writer
    (for example the draw store) already put in the directory."""
    manifest = {
        "command": command,
        "config": resolved,
        "config_hash": gibbs.config_hash({"command": command, "config": resolved}),
        "seed": seed,
        "versions": {"mbsts": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_clock_seconds": time.perf_counter() - t0,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    target = Path(out_dir, "manifest.json")
    if target.exists():
        existing = json.loads(target.read_text())
        existing.update(manifest)
        manifest = existing
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _spec_from_config(config):
    model = config.get("model")
    if not model:
        raise ConfigError("config is missing the 'model' section")
    try:
        return gibbs.spec_from_dict(model)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model section: {exc}")


def _load_training_data(config, spec):
    data = config.get("data") or {}
    if "prices" in data:
        k = int(data.get("max_log_return_k", 5))
        panels = [ingest.load_price_panel(p) for p in data["prices"]]
        ys = [ingest.max_log_return(panel, k) for panel in panels]
        n = min(len(y) for y in ys)
        Y = np.column_stack([y[:n] for y in ys])
        dates = panels[0].dates[:n]
    else:
        targets = _require(data, "targets", "data")
        dates, Y, _ = ingest.read_table(targets)
        n = Y.shape[0]
    preds = data.get("predictors")
    if preds:
        X_blocks = []
        for p in preds:
            _, X, _ = ingest.read_table(p)
            X_blocks.append(X[:n])
    else:
        X_blocks = [np.zeros((n, k)) for k in spec.predictor_counts]
    lags = data.get("lags")
    if lags:
        Y, X_blocks, dates = apply_lags(Y, X_blocks, lags, dates)
    if Y.shape[1] != spec.m:
        raise ConfigError(f"data supplies {Y.shape[1]} target series, "
                          f"model declares {spec.m}")
    for i, X in enumerate(X_blocks):
        if X.shape[1] != spec.predictor_counts[i]:
            raise ConfigError(
                f"series {i}: {X.shape[1]} predictor columns, model "
                f"declares {spec.predictor_counts[i]}")
    return dates, Y, X_blocks


def apply_lags(Y, X_blocks, lags, dates=None):
    """Shift predictor columns back by their per-column lags (a lag of L
    means column value from t-L explains the target at t); rows without a
    complete history are dropped."""
    lags = [np.asarray(l, dtype=int) for l in lags]
    max_lag = max((int(l.max()) for l in lags if l.size), default=0)
    if max_lag == 0:
        return Y, X_blocks, dates
    shifted = []
    for X, lag in zip(X_blocks, lags):
        out = np.empty((X.shape[0] - max_lag, X.shape[1]))
        for j in range(X.shape[1]):
            lj = int(lag[j]) if lag.size else 0
            out[:, j] = X[max_lag - lj:X.shape[0] - lj, j]
        shifted.append(out)
    return Y[max_lag:], shifted, dates[max_lag:] if dates is not None else None


def _priors_from_config(config, Y, spec):
    p = dict(config.get("priors") or {})
    counts = spec.predictor_counts
    sizes = p.get("expected_model_sizes")
    if sizes is None:
        sizes = [max(1.0, 0.5 * k) if k else 0.0 for k in counts]
    m = spec.m
    if Y.shape[0] > 2:
        # scale from first differences so a trend does not inflate the
        # observation-noise prior
        sigma_y = np.atleast_2d(np.cov(np.diff(Y, axis=0), rowvar=False))
    else:
        sigma_y = np.eye(m)
    try:
        return regression.elicit_priors(
            sizes, counts,
            expected_r2=p.get("expected_r2", 0.8),
            v0=p.get("v0", m + 2.0),
            Sigma_y=sigma_y,
            kappa=p.get("kappa", regression.DEFAULT_KAPPA),
            omega=p.get("omega", regression.DEFAULT_OMEGA),
            component_weight=p.get("component_weight"),
            component_scale=p.get("component_scale"))
    except ValueError as exc:
        raise ConfigError(f"invalid priors section: {exc}")


def _train_config(config, args, seed):
    t = _merged(config, "train", {"total_draws": getattr(args, "draws", None),
                                  "burn_in": getattr(args, "burn", None),
                                  "chains": getattr(args, "chains", None)})
    try:
        return TrainConfig(total_draws=int(t.get("total_draws", 2000)),
                           burn_in=int(t.get("burn_in", 200)),
                           seed=seed, chains=int(t.get("chains", 1)))
    except ValueError as exc:
        raise ConfigError(f"invalid train section: {exc}")


def _out_dir(args, config, default):
    out = args.output or config.get("output_dir") or default
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_simulate(args, config):
    t0 = time.perf_counter()
    s = _merged(config, "simulate", {"model": args.model, "n": args.n,
                                     "rho": args.rho})
    model_id = int(_require(s, "model", "simulate"))
    n = int(_require(s, "n", "simulate"))
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    rho = s.get("rho")
    dataset = simgen.generate_model(model_id, n, seed,
                                    correlation_override=rho)
    out = _out_dir(args, config, f"dataset_model{model_id}")
    ingest.write_dataset(dataset, out)
    _write_manifest(out, "simulate",
                    {"model": model_id, "n": n, "rho": rho, "seed": seed}, seed, t0)
    print(f"wrote dataset ({n} rows, {dataset.m} series) to {out}")
    return EXIT_OK


def cmd_train(args, config):
    t0 = time.perf_counter()
    if args.data:
        config = dict(config)
        config["data"] = {"targets": str(Path(args.data) / "targets.csv"),
                          "predictors": [str(p) for p in sorted(
                              Path(args.data).glob("predictors_*.csv"),
                              key=lambda p: int(p.stem.split("_")[1]))]}
    spec = _spec_from_config(config)
    _, Y, X_blocks = _load_training_data(config, spec)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    priors = _priors_from_config(config, Y, spec)
    cfg = _train_config(config, args, seed)
    draws = gibbs.train(Y, X_blocks, spec, priors, cfg)
    out = _out_dir(args, config, "draws")
    gibbs.save_draws(draws, out)
    _write_manifest(out, "train",
                    {"model": gibbs.spec_to_dict(spec),
                     "train": cfg.to_dict(),
                     "data_rows": int(Y.shape[0])}, seed, t0)
    print(f"retained {draws.num_draws} draws to {out}")
    return EXIT_OK


def cmd_forecast(args, config):
    t0 = time.perf_counter()
    draws_dir = args.draws_dir or config.get("draws_dir")
    if draws_dir is None:
        raise ConfigError("forecast requires --draws-dir (or draws_dir in config)")
    draws = gibbs.load_draws(draws_dir)
    f = _merged(config, "forecast", {"horizon": args.horizon})
    horizon = int(_require(f, "horizon", "forecast"))
    levels = [float(v) for v in f.get("levels", [0.4, 0.9])]
    counts = draws.spec.predictor_counts
    future = args.future or f.get("future")
    if future:
        X_future = []
        for i in range(draws.spec.m):
            _, X, _ = ingest.read_table(Path(future) / f"predictors_{i + 1}.csv")
            X_future.append(X)
    else:
        if any(counts):
            raise ConfigError("model has predictors; forecast requires --future")
        X_future = [np.zeros((horizon, 0)) for _ in range(draws.spec.m)]
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    result = fc.summarize(fc.predict(draws, X_future, horizon, rng), levels)
    out = _out_dir(args, config, "forecast")
    _write_forecast_csvs(result, levels, out)
    _write_manifest(out, "forecast",
                    {"horizon": horizon, "levels": levels,
                     "draws_dir": str(draws_dir)}, seed, t0)
    print(f"wrote forecast ({horizon} steps x {draws.spec.m} series) to {out}")
    return EXIT_OK


def _write_forecast_csvs(result, levels, out):
    draws_n, horizon, m = result.samples.shape
    lines = ["draw,step,series,value"]
    for r in range(draws_n):
        for h in range(horizon):
            for i in range(m):
                lines.append(f"{r},{h + 1},{i + 1},{result.samples[r, h, i]!r}")
    Path(out, "samples.csv").write_text("\n".join(lines) + "\n")
    header = ["step", "series", "mean"]
    for level in levels:
        header += [f"lower_{level}", f"upper_{level}"]
    lines = [",".join(header)]
    for h in range(horizon):
        for i in range(m):
            row = [str(h + 1), str(i + 1), repr(float(result.mean[h, i]))]
            for level in levels:
                q = result.quantiles[level]
                row += [repr(float(q["lower"][h, i])), repr(float(q["upper"][h, i]))]
            lines.append(",".join(row))
    Path(out, "summary.csv").write_text("\n".join(lines) + "\n")


def cmd_evaluate(args, config):
    t0 = time.perf_counter()
    if not args.data:
        raise ConfigError("evaluate requires --data pointing at a dataset directory")
    spec = _spec_from_config(config)
    _, Y, X_blocks, _ = ingest.load_dataset_arrays(args.data)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    e = _merged(config, "evaluate",
                {"initial_train_len": args.initial_train_len,
                 "horizon_steps": args.steps})
    n = Y.shape[0]
    initial = int(e.get("initial_train_len") or int(0.8 * n))
    steps = int(e.get("horizon_steps") or (n - initial))
    variants = tuple(e.get("variants", [bench.VARIANT_JOINT,
                                        bench.VARIANT_INDEPENDENT]))
    cfg = EvalConfig(initial_train_len=initial, horizon_steps=steps,
                     train_cfg=_train_config(config, args, seed),
                     model_variants=variants,
                     expected_r2=(config.get("priors") or {}).get("expected_r2", 0.8),
                     kappa=(config.get("priors") or {}).get("kappa",
                                                            regression.DEFAULT_KAPPA))
    dataset = simgen.SyntheticDataset(
        Y=Y, X_blocks=X_blocks, spec=spec,
        B=[np.zeros(k) for k in spec.predictor_counts],
        gamma_true=[np.zeros(k, dtype=int) for k in spec.predictor_counts],
        sigma_eps=np.eye(spec.m),
        theta=None, seed=seed)
    report = bench.growing_window_eval(dataset, cfg)
    out = _out_dir(args, config, "eval")
    _write_eval_csv(report, out / "eval.csv")
    _write_manifest(out, "evaluate",
                    {"initial_train_len": initial, "horizon_steps": steps,
                     "variants": list(variants),
                     "train": cfg.train_cfg.to_dict()}, seed, t0)
    for label, trace in report.variants.items():
        print(f"{label}: final cumulative PE = "
              f"{trace.cumulative[-1] if steps else 0.0:.4f}")
    return EXIT_OK


def _write_eval_csv(report, path):
    lines = ["step,variant,pe,cumulative_pe"]
    for row in bench.report_rows(report):
        lines.append(f"{row['step']},{row['variant']},"
                     f"{row['pe']!r},{row['cumulative_pe']!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_report(args, config):
    t0 = time.perf_counter()
    if not args.inputs:
        raise ConfigError("report requires at least one eval.csv input")
    tables = {}
    steps = None
    for path in args.inputs:
        header, body = ingest._read_rows(path)
        if header != ["step", "variant", "pe", "cumulative_pe"]:
            raise ConfigError(f"{path}: not an eval CSV")
        for row in body:
            key = f"{Path(path).parent.name}:{row[1]}"
            tables.setdefault(key, []).append(float(row[3]))
    lengths = {len(v) for v in tables.values()}
    if len(lengths) > 1:
        raise ConfigError("eval inputs have mismatched horizon lengths")
    steps = lengths.pop() if lengths else 0
    out = _out_dir(args, config, "report")
    labels = sorted(tables)
    lines = ["step," + ",".join(labels)]
    for s in range(steps):
        lines.append(",".join([str(s + 1)] + [repr(tables[k][s]) for k in labels]))
    finals = {k: tables[k][-1] if steps else 0.0 for k in labels}
    ref = finals[labels[0]] if labels else 0.0
    lines.append("final," + ",".join(repr(finals[k]) for k in labels))
    lines.append("relative_gap," + ",".join(
        repr((finals[k] - ref) / ref if ref else 0.0) for k in labels))
    Path(out, "comparison.csv").write_text("\n".join(lines) + "\n")
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    _write_manifest(out, "report", {"inputs": [str(p) for p in args.inputs]},
                    seed, t0)
    print(f"wrote comparison table ({len(labels)} columns) to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mbsts",
        description="Multivariate Bayesian structural time-series engine")
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--output", help="output directory")
    # the global flags are also accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a benchmark dataset",
                       parents=[common])
    p.add_argument("--model", type=int, help="simulation model id (1-7)")
    p.add_argument("--n", type=int, help="number of rows")
    p.add_argument("--rho", type=float, help="observation correlation override")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="run the Gibbs sampler", parents=[common])
    p.add_argument("--data", help="dataset directory (targets.csv + predictors)")
    p.add_argument("--draws", type=int, help="total MCMC draws")
    p.add_argument("--burn", type=int, help="burn-in draws to discard")
    p.add_argument("--chains", type=int, help="number of chains")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", help="posterior-predictive forecast", parents=[common])
    p.add_argument("--draws-dir", help="directory written by 'train'")
    p.add_argument("--horizon", type=int, help="steps ahead")
    p.add_argument("--future", help="directory of future predictor CSVs")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("evaluate", help="growing-window comparison", parents=[common])
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--initial-train-len", type=int, dest="initial_train_len")
    p.add_argument("--steps", type=int, help="evaluation steps")
    p.add_argument("--draws", type=int, help="total MCMC draws per refit")
    p.add_argument("--burn", type=int, help="burn-in per refit")
    p.add_argument("--chains", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="align eval CSVs into one table", parents=[common])
    p.add_argument("inputs", nargs="*", help="eval.csv files")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, GibbsError, EvalError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
