"""Timing comparison between the compiled kernels and the numpy fallback.

Runs each hot kernel (gaussian_chain, finite_chain, lagged_sums) at the
scale of a single full-scale replication and reports per-call wall time
for both backends plus the speedup.

Usage: python3 benchmarks/bench_kernels.py [--steps 50050] [--walkers 10]
"""

import argparse
import importlib
import math
import time

import numpy as np

from lagdmc.rng import RngStream


def _backends():
    backends = {}
    try:
        backends["compiled"] = importlib.import_module("lagdmc._kernels._core")
    except ImportError:
        print("compiled extension not available; timing fallback only")
    backends["fallback"] = importlib.import_module("lagdmc._kernels._fallback")
    return backends


def _time(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=50050)
    parser.add_argument("--walkers", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    T, N = args.steps, args.walkers
    rng = RngStream(12345).generator()
    backends = _backends()

    # gaussian_chain at the oscillator's parameters
    tau = 1.0 / 16.0
    x0 = rng.standard_normal(N)
    u_sel = rng.random((T, N))
    z_mut = rng.standard_normal((T, N))

    # finite_chain on a 2-state model
    M = np.array([[0.7, 0.3], [0.4, 0.6]])
    cum_rows = np.cumsum(M, axis=1)
    g_vec = np.array([1.0, 0.5])
    phi_mat = g_vec[None, :].copy()
    states0 = (rng.random(N) < 0.5).astype(np.intp)
    u_mut = rng.random((T, N))

    # lagged_sums over a realistic record stream
    lags = np.arange(0, 51, 5, dtype=np.intp)
    n_windows = T - int(lags[-1])
    g_rec = np.exp(rng.normal(loc=-1.0 / 32.0, scale=0.01, size=T))
    f_rec = g_rec[:, None].copy()

    cases = {
        "gaussian_chain": lambda mod: mod.gaussian_chain(
            x0, 1.0, math.sqrt(tau), 0.0, -tau / 2.0, u_sel, z_mut),
        "finite_chain": lambda mod: mod.finite_chain(
            cum_rows, g_vec, phi_mat, states0, u_sel, u_mut),
        "lagged_sums": lambda mod: mod.lagged_sums(
            g_rec, f_rec, lags, n_windows),
    }

    print(f"steps={T} walkers={N} lags={list(map(int, lags))} "
          f"(best of {args.repeats})")
    header = f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, call in cases.items():
        times = {}
        for bname, mod in backends.items():
            times[bname], _ = _time(lambda m=mod: call(m), args.repeats)
        row = f"{name:<16}" + "".join(f"{times[b] * 1e3:>10.1f}ms"
                                      for b in backends)
        if len(times) == 2:
            row += f"{times['fallback'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
