"""Command-line entry point.

Subcommands:
  bias-sweep          run the replication experiment, write result tables
  variance-compare    bias-sweep with the split-stream estimator enabled
  oracle-check        exact-identity suite for a finite model
  unbiasedness-check  enumeration vs engine Monte Carlo on a tiny model

Exit codes: 0 success, 1 check failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import fk_core, validation
from .experiments import (ConfigError, ExperimentConfig, aggregate,
                          reference_value, run_experiment, write_outputs)
from .rng import RngStream

OUTPUT_FILES = ("bias.csv", "variance.csv", "fit.json", "meta.json")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _experiment_config(args, force_variance=False):
    doc = _load_json(args.config)
    cfg = ExperimentConfig.from_dict(doc)
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = args.out
    if force_variance:
        updates["variance_compare"] = True
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    if cfg.output_dir is None:
        raise ConfigError("no output directory (set output_dir or pass --out)")
    return cfg


def _remove_partial(outdir):
    for name in OUTPUT_FILES:
        path = os.path.join(outdir, name)
        if os.path.exists(path):
            os.remove(path)


def cmd_bias_sweep(args, force_variance=False):
    cfg = _experiment_config(args, force_variance=force_variance)
    t0 = time.perf_counter()
    try:
        reports = run_experiment(cfg, workers=args.workers)
        ref, provenance = reference_value(cfg)
        agg = aggregate(reports, reference=ref, provenance=provenance,
                        fit_lags=cfg.fit_lags)
        write_outputs(cfg.output_dir, cfg, agg,
                      runtime_seconds=time.perf_counter() - t0)
    except Exception:
        _remove_partial(cfg.output_dir)
        raise
    print(f"wrote {', '.join(OUTPUT_FILES)} to {cfg.output_dir} "
          f"({cfg.replications} runs, {time.perf_counter() - t0:.1f}s)")
    return 0


def _finite_model_from_config(path):
    doc = _load_json(path)
    if "model" in doc:
        doc = doc["model"]
        doc = {k: v for k, v in doc.items() if k != "type"}
    try:
        return fk_core.FiniteFkModel.from_dict(doc)
    except fk_core.ModelValidationError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad finite model: {exc}") from exc


def cmd_oracle_check(args):
    model = _finite_model_from_config(args.config)
    tol = 1e-10
    trip = fk_core.power_iteration(model)
    checks = {}
    checks["eigen_residual"] = trip.residual
    checks["eta_inf_G_minus_lambda"] = abs(float(trip.eta_inf @ model.G) - trip.lam)
    fixed = fk_core.phi_map(model, fk_core.MeasureVector(trip.eta_inf, normalized=True))
    checks["fixed_point_l1"] = float(np.abs(fixed.weights - trip.eta_inf).sum())
    mu = fk_core.MeasureVector(trip.eta_inf, normalized=True)
    worst = 0.0
    for l in range(1, 11):
        lhs = fk_core.lag_limit(model, mu, l, model.G)
        worst = max(worst, abs(lhs - trip.lam))
    checks["eigen_consistency"] = worst
    sg_worst = 0.0
    phi = model.G
    for a in range(0, 4):
        for b in range(0, 4):
            direct = fk_core.lag_limit(model, mu, a + b, phi)
            pushed = mu.weights.copy()
            for _ in range(a):
                pushed = fk_core.phi_map(model, fk_core.MeasureVector(
                    pushed, normalized=True)).weights
            via = fk_core.lag_limit(model, fk_core.MeasureVector(pushed, normalized=True),
                                    b, phi)
            sg_worst = max(sg_worst, abs(direct - via))
    checks["semigroup_consistency"] = sg_worst
    ok = all(v <= tol for v in checks.values())
    report = {"lambda": trip.lam, "h": trip.h.tolist(),
              "eta_inf": trip.eta_inf.tolist(), "checks": checks,
              "tolerance": tol, "pass": ok}
    print(f"lambda      = {trip.lam:.10f}")
    print(f"h           = {np.array2string(trip.h, precision=8)}")
    print(f"eta_inf     = {np.array2string(trip.eta_inf, precision=8)}")
    for name, value in checks.items():
        status = "ok" if value <= tol else "FAIL"
        print(f"{name:28s} {value:.3e}  [{status}]")
    print(json.dumps(report))
    return 0 if ok else 1


_UNBIASED_KEYS = {"model", "N", "n", "engine_runs", "master_seed"}


def cmd_unbiasedness_check(args):
    doc = _load_json(args.config)
    unknown = set(doc) - _UNBIASED_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model_doc = doc["model"]
    model_doc = {k: v for k, v in model_doc.items() if k != "type"}
    model = fk_core.FiniteFkModel.from_dict(model_doc)
    seed = args.seed if args.seed is not None else int(doc.get("master_seed", 0))
    rng = RngStream(seed).generator()
    result = validation.unbiasedness_check(
        model, N=int(doc["N"]), n=int(doc["n"]),
        engine_runs=int(doc.get("engine_runs", 10**5)), rng=rng)
    enum_ok = bool(result["enumeration_gap"] <= 1e-12)
    mc_ok = bool(abs(result["engine_zscore"]) <= 4.0)
    result["enumeration_pass"] = enum_ok
    result["engine_pass"] = mc_ok
    print(f"exact enumeration   = {result['exact_enumeration']:.15f}")
    print(f"oracle gamma_n(1)   = {result['oracle_gamma']:.15f}")
    print(f"enumeration gap     = {result['enumeration_gap']:.3e}  "
          f"[{'ok' if enum_ok else 'FAIL'}]")
    print(f"engine mean (R={result['engine_runs']}) = {result['engine_mean']:.15f} "
          f"+/- {result['engine_se']:.2e}")
    print(f"engine z-score      = {result['engine_zscore']:+.2f}  "
          f"[{'ok' if mc_ok else 'FAIL'}]")
    print(json.dumps(result))
    return 0 if enum_ok and mc_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="lagdmc")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("bias-sweep", "variance-compare", "oracle-check",
                 "unbiasedness-check"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--workers", type=int, default=None, help="process count")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bias-sweep":
            return cmd_bias_sweep(args)
        if args.command == "variance-compare":
            return cmd_bias_sweep(args, force_variance=True)
        if args.command == "oracle-check":
            return cmd_oracle_check(args)
        if args.command == "unbiasedness-check":
            return cmd_unbiasedness_check(args)
    except (ConfigError, fk_core.ModelValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except fk_core.ConvergenceError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
