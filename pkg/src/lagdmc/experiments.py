"""Replication orchestration: run R independent trajectories, aggregate
per-lag bias/variance across runs, fit the exponential bias decay and
write the result tables.

Replications are embarrassingly parallel; each one derives its streams
from (master_seed, replication_index, role), so the aggregate output is
identical regardless of worker count or completion order.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _kernels, fk_core
from .estimators import InsufficientDataError, lagged_window_sums
from .models import (FiniteModelSampler, GuidedHOModel, HarmonicOscillatorModel,
                     finite_adapter)
from .rng import RngStream, StreamRole
from .trajectory import simulate_stream

CODE_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


_CONFIG_KEYS = {"model", "N", "n", "lags", "replications", "master_seed",
                "test_functions", "output_dir", "variance_compare",
                "batch_count", "fit_lags"}

_MODEL_KEYS = {
    "harmonic_oscillator": {"type", "tau", "omega", "mass", "initial_mean", "initial_std"},
    "guided_harmonic_oscillator": {"type", "tau", "alpha", "kernel_mode",
                                   "initial_mean", "initial_std"},
    "finite": {"type", "M", "G", "eta0"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    N: int
    n: int
    lags: tuple
    replications: int
    master_seed: int
    test_functions: tuple = ("G",)
    output_dir: str | None = None
    variance_compare: bool = False
    batch_count: int | None = None
    fit_lags: tuple | None = None

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"model", "N", "n", "lags", "replications", "master_seed"} - set(doc)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        model = doc["model"]
        if not isinstance(model, dict) or "type" not in model:
            raise ConfigError("model must be an object with a 'type' key")
        if model["type"] not in _MODEL_KEYS:
            raise ConfigError(f"unknown model type {model['type']!r}")
        unknown = set(model) - _MODEL_KEYS[model["type"]]
        if unknown:
            raise ConfigError(f"unknown model keys: {sorted(unknown)}")
        cfg = cls(model=model,
                  N=int(doc["N"]),
                  n=int(doc["n"]),
                  lags=tuple(int(l) for l in doc["lags"]),
                  replications=int(doc["replications"]),
                  master_seed=int(doc["master_seed"]),
                  test_functions=tuple(doc.get("test_functions", ["G"])),
                  output_dir=doc.get("output_dir"),
                  variance_compare=bool(doc.get("variance_compare", False)),
                  batch_count=doc.get("batch_count"),
                  fit_lags=tuple(doc["fit_lags"]) if doc.get("fit_lags") else None)
        cfg.validate()
        return cfg

    def validate(self):
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not self.lags or any(l < 0 for l in self.lags):
            raise ConfigError("lags must be nonempty and non-negative")
        if self.replications < 2:
            raise ConfigError("replications must be >= 2 for variance estimates")

    def sorted_lags(self):
        return tuple(sorted(set(self.lags)))


def build_model(spec):
    kind = spec["type"]
    params = {k: v for k, v in spec.items() if k != "type"}
    if kind == "harmonic_oscillator":
        return HarmonicOscillatorModel(**params)
    if kind == "guided_harmonic_oscillator":
        return GuidedHOModel(**params)
    if kind == "finite":
        return finite_adapter(fk_core.FiniteFkModel.from_dict(params))
    raise ConfigError(f"unknown model type {kind!r}")


@dataclass(frozen=True)
class ReplicationReport:
    replication_index: int
    lags: tuple
    estimates: np.ndarray               # (n_lags, n_phi)
    bm_var: np.ndarray                  # (n_lags,) variance of the lag ratio, phi 0
    independent: np.ndarray | None      # (n_lags,) mu-tilde estimates, phi 0
    seed_triple: tuple = ()
    wall_seconds: float = field(default=0.0, compare=False)


def _batch_means_var(g, f, lag, n_windows, phi_index=0, batch_count=None):
    # delta-method batch means over the first n_windows window starts
    K = n_windows
    if batch_count is None:
        batch_count = max(2, int(math.floor(math.sqrt(K))))
    m = K // batch_count
    if m < 1:
        raise InsufficientDataError(f"{K} windows cannot fill {batch_count} batches")
    used = m * batch_count
    S = np.concatenate(([0.0], np.cumsum(np.log(g))))
    k = np.arange(used)
    den_k = np.exp(S[k + lag] - S[k])
    num_k = f[k + lag, phi_index] * den_k
    ratio = num_k.sum() / den_k.sum()
    num_b = num_k.reshape(batch_count, m).mean(axis=1)
    den_b = den_k.reshape(batch_count, m).mean(axis=1)
    lin = (num_b - ratio * den_b) / den_k.mean()
    return float(m * np.var(lin, ddof=1)) / used


def run_replication(config, replication_index):
    """One independent trajectory (plus its paired copy when comparing the
    split-stream estimator), reduced to per-lag estimates."""
    t0 = time.perf_counter()
    model = build_model(config.model)
    lags = config.sorted_lags()
    max_lag = lags[-1]
    n_records = config.n + max_lag
    stream = RngStream(config.master_seed, replication_index, StreamRole.TRAJECTORY)
    g, f = simulate_stream(model, config.N, n_records, stream.generator(),
                           config.test_functions)
    num, den = lagged_window_sums(g, f, lags, config.n)
    estimates = num / den[:, None]
    bm_var = np.array([_batch_means_var(g, f, l, config.n,
                                        batch_count=config.batch_count)
                       for l in lags])
    independent = None
    if config.variance_compare:
        stream_b = RngStream(config.master_seed, replication_index,
                             StreamRole.INDEPENDENT_COPY)
        g_b, f_b = simulate_stream(model, config.N, n_records, stream_b.generator(),
                                   config.test_functions)
        _, den_b = lagged_window_sums(g_b, f_b, lags, config.n)
        independent = num[:, 0] / den_b
    return ReplicationReport(
        replication_index=replication_index,
        lags=lags,
        estimates=estimates,
        bm_var=bm_var,
        independent=independent,
        seed_triple=(config.master_seed, replication_index, int(StreamRole.TRAJECTORY)),
        wall_seconds=time.perf_counter() - t0)


def _worker(args):
    config_doc, index = args
    return run_replication(ExperimentConfig.from_dict(config_doc), index)


def config_to_dict(config):
    doc = asdict(config)
    doc["lags"] = list(config.lags)
    doc["test_functions"] = list(config.test_functions)
    if config.fit_lags is not None:
        doc["fit_lags"] = list(config.fit_lags)
    return {k: v for k, v in doc.items() if v is not None or k in
            {"output_dir", "batch_count", "fit_lags"}}


def run_experiment(config, workers=None):
    """All replications, optionally across a process pool; reports come
    back sorted by replication index regardless of completion order."""
    indices = list(range(config.replications))
    if workers is None or workers <= 1:
        reports = [run_replication(config, i) for i in indices]
    else:
        doc = config_to_dict(config)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_worker, [(doc, i) for i in indices]))
    return sorted(reports, key=lambda r: r.replication_index)


@dataclass(frozen=True)
class BiasFit:
    slope: float
    intercept: float
    slope_se: float
    fit_lags: tuple
    r2: float


@dataclass(frozen=True)
class AggregateReport:
    lags: tuple
    mean_estimate: np.ndarray
    se_mean: np.ndarray
    abs_bias: np.ndarray
    log_abs_bias: np.ndarray
    var_joint: np.ndarray
    var_independent: np.ndarray | None
    n_runs: int
    reference: float | None
    reference_provenance: str | None
    fit: BiasFit | None


def _line_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    xbar, ybar = x.mean(), y.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = np.sum((x - xbar) * (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    if n > 2:
        s2 = np.sum(resid**2) / (n - 2)
        slope_se = math.sqrt(s2 / sxx)
    else:
        slope_se = float("nan")
    sst = np.sum((y - ybar) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / sst) if sst > 0 else 1.0
    return float(slope), float(intercept), float(slope_se), float(r2)


def aggregate(reports, reference=None, provenance=None, fit_lags=None, phi_index=0):
    """Across-run statistics per lag plus the log-bias decay fit.

    The fit range defaults to lags whose absolute bias exceeds 3x its
    Monte Carlo standard error, which excludes the noise floor.
    """
    if len(reports) < 2:
        raise InsufficientDataError("need at least two replication reports")
    lags = reports[0].lags
    est = np.array([r.estimates[:, phi_index] for r in reports])   # (R, L)
    R = est.shape[0]
    mean = est.mean(axis=0)
    var_joint = est.var(axis=0, ddof=1)
    se_mean = np.sqrt(var_joint / R)
    var_ind = None
    if reports[0].independent is not None:
        ind = np.array([r.independent for r in reports])
        var_ind = ind.var(axis=0, ddof=1)
    abs_bias = log_abs_bias = None
    fit = None
    if reference is not None:
        abs_bias = np.abs(mean - reference)
        with np.errstate(divide="ignore"):
            log_abs_bias = np.log(abs_bias)
        if fit_lags is None:
            mask = abs_bias > 3.0 * se_mean
            fit_lags_eff = tuple(l for l, m in zip(lags, mask) if m)
        else:
            fit_lags_eff = tuple(l for l in fit_lags if l in lags)
        if len(fit_lags_eff) >= 2:
            sel = [lags.index(l) for l in fit_lags_eff]
            slope, intercept, slope_se, r2 = _line_fit(
                np.array(fit_lags_eff, dtype=float), log_abs_bias[sel])
            fit = BiasFit(slope=slope, intercept=intercept, slope_se=slope_se,
                          fit_lags=fit_lags_eff, r2=r2)
    return AggregateReport(lags=lags, mean_estimate=mean, se_mean=se_mean,
                           abs_bias=abs_bias, log_abs_bias=log_abs_bias,
                           var_joint=var_joint, var_independent=var_ind,
                           n_runs=R, reference=reference,
                           reference_provenance=provenance, fit=fit)


def reference_value(config):
    """Target eigenvalue and where it came from.

    Finite models get the dominant eigenvalue by power iteration; the
    oscillator family has the closed form exp(-tau * omega / 2), which the
    guided variant shares because the guiding transform is a similarity
    transform of the same operator.
    """
    kind = config.model["type"]
    if kind == "finite":
        model = build_model(config.model)
        trip = fk_core.power_iteration(model.model)
        return trip.lam, "power_iteration"
    if kind == "harmonic_oscillator":
        tau = float(config.model.get("tau", 1.0 / 16.0))
        omega = float(config.model.get("omega", 1.0))
        return math.exp(-tau * omega / 2.0), "closed_form"
    if kind == "guided_harmonic_oscillator":
        tau = float(config.model.get("tau", 1.0 / 16.0))
        return math.exp(-tau / 2.0), "closed_form_similarity"
    raise ConfigError(f"no reference value for model type {kind!r}")


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.17g}"


def write_outputs(outdir, config, agg, runtime_seconds=None):
    """Emit bias.csv, variance.csv, fit.json and meta.json into outdir."""
    import os

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "bias.csv"), "w") as fh:
        fh.write("lag,mean_estimate,abs_bias,log_abs_bias,se_mean,n_runs\n")
        for i, l in enumerate(agg.lags):
            ab = agg.abs_bias[i] if agg.abs_bias is not None else None
            lb = agg.log_abs_bias[i] if agg.log_abs_bias is not None else None
            fh.write(f"{l},{_fmt(agg.mean_estimate[i])},{_fmt(ab)},{_fmt(lb)},"
                     f"{_fmt(agg.se_mean[i])},{agg.n_runs}\n")
    with open(os.path.join(outdir, "variance.csv"), "w") as fh:
        fh.write("lag,var_joint,var_independent,n_runs\n")
        for i, l in enumerate(agg.lags):
            vi = agg.var_independent[i] if agg.var_independent is not None else None
            fh.write(f"{l},{_fmt(agg.var_joint[i])},{_fmt(vi)},{agg.n_runs}\n")
    fit_doc = None
    if agg.fit is not None:
        fit_doc = {"slope": agg.fit.slope, "intercept": agg.fit.intercept,
                   "slope_se": agg.fit.slope_se, "fit_lags": list(agg.fit.fit_lags),
                   "r2": agg.fit.r2}
    with open(os.path.join(outdir, "fit.json"), "w") as fh:
        json.dump(fit_doc, fh, indent=2)
        fh.write("\n")
    meta = {
        "config": config_to_dict(config),
        "reference": agg.reference,
        "reference_provenance": agg.reference_provenance,
        "code_version": CODE_VERSION,
        "kernel_backend": _kernels.BACKEND,
        "seed_roles": {"trajectory": int(StreamRole.TRAJECTORY),
                       "independent_copy": int(StreamRole.INDEPENDENT_COPY)},
        "runtime_seconds": runtime_seconds,
    }
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
