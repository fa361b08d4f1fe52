"""Streaming estimators over one walker trajectory.

A trajectory is reduced to a stream of per-step scalars: the population
mean weight g_p and the population averages f_p[j] of each registered test
function.  Every estimator here is a function of that stream alone.

The lagged ratio estimator averages, over window starts k, the terminal
test-function average times the product of the window's mean weights, and
divides by the same quantity with the test function replaced by 1.  Window
products are formed from compensated log prefix sums (O(1) per lag per
step, no under/overflow for long windows), and all running sums use
Kahan compensation.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels


class SequencingError(ValueError):
    """Records arrived out of order or with gaps."""


class InsufficientDataError(ValueError):
    """Not enough complete windows for the requested computation."""


@dataclass(frozen=True)
class StepRecord:
    """Per-step scalars: mean weight g and test-function averages f."""

    step_index: int
    g: float
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.atleast_1d(np.asarray(self.f, dtype=float)))
        if not (math.isfinite(self.g) and self.g > 0):
            raise ValueError(f"step {self.step_index}: g = {self.g} must be finite and > 0")
        if not np.all(np.isfinite(self.f)):
            raise ValueError(f"step {self.step_index}: non-finite test function average")


class KahanSum:
    """Compensated running sum; error stays O(1) ulps over long streams."""

    __slots__ = ("total", "carry")

    def __init__(self):
        self.total = 0.0
        self.carry = 0.0

    def add(self, value):
        y = value - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t


@dataclass(frozen=True)
class EstimateReport:
    """Finalized per-lag ratios for each test function."""

    lags: tuple
    ratios: np.ndarray           # (n_lags, n_phi)
    window_counts: tuple
    wall_seconds: float = 0.0


class LaggedAccumulator:
    """Streaming state for the lagged ratio estimator at several lags at once.

    Keeps the compensated log prefix sum S_p = sum_{q<p} log g_q, a ring
    buffer of the last max(lags)+1 (S, f) pairs, and Kahan-compensated
    numerator/denominator sums per lag.  If max_windows is set, each lag
    stops accumulating after that many window starts, which equalizes the
    k-range across lags when the trajectory is run for n + max(lags) extra
    records.
    """

    def __init__(self, lags, n_phi, max_windows=None):
        lags = sorted(set(int(l) for l in lags))
        if not lags or lags[0] < 0:
            raise ValueError("lags must be a nonempty set of non-negative integers")
        self.lags = lags
        self.n_phi = int(n_phi)
        self.max_windows = max_windows
        self._prefix = KahanSum()
        self._buffer = deque(maxlen=lags[-1] + 1)   # (S_p, f_p) pairs
        self._next_step = 0
        self.num = [[KahanSum() for _ in range(n_phi)] for _ in lags]
        self.den = [KahanSum() for _ in lags]
        self.counts = [0 for _ in lags]

    def record_step(self, rec):
        if rec.step_index != self._next_step:
            raise SequencingError(
                f"expected step {self._next_step}, got {rec.step_index}")
        if rec.f.shape[0] != self.n_phi:
            raise ValueError(f"expected {self.n_phi} test functions, got {rec.f.shape[0]}")
        p = rec.step_index
        S_p = self._prefix.total
        self._buffer.append((S_p, rec.f))
        for i, l in enumerate(self.lags):
            k = p - l
            if k < 0:
                continue
            if self.max_windows is not None and self.counts[i] >= self.max_windows:
                continue
            S_k = self._buffer[-(l + 1)][0]
            window = math.exp(S_p - S_k)
            self.den[i].add(window)
            for j in range(self.n_phi):
                self.num[i][j].add(rec.f[j] * window)
            self.counts[i] += 1
        self._prefix.add(math.log(rec.g))
        self._next_step += 1

    def finalize(self, wall_seconds=0.0):
        if min(self.counts) == 0:
            l = self.lags[int(np.argmin(self.counts))]
            raise InsufficientDataError(f"no complete window for lag {l}")
        ratios = np.empty((len(self.lags), self.n_phi))
        for i in range(len(self.lags)):
            for j in range(self.n_phi):
                ratios[i, j] = self.num[i][j].total / self.den[i].total
        return EstimateReport(lags=tuple(self.lags), ratios=ratios,
                              window_counts=tuple(self.counts),
                              wall_seconds=wall_seconds)


def record_step(acc, rec):
    acc.record_step(rec)
    return acc


def finalize(acc):
    return acc.finalize()


def records_to_arrays(records):
    g = np.array([r.g for r in records], dtype=float)
    f = np.array([r.f for r in records], dtype=float)
    return g, f


def lagged_window_sums(g, f, lags, n_windows):
    """Bulk (numerator, denominator) window sums via the selected kernel
    backend.  Equivalent to streaming the records through a
    LaggedAccumulator with max_windows = n_windows."""
    lags = sorted(set(int(l) for l in lags))
    if n_windows < 1:
        raise InsufficientDataError("need at least one complete window")
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    return _kernels.lagged_sums(np.asarray(g, dtype=float), f,
                                np.asarray(lags, dtype=np.intp), int(n_windows))


def standard_estimator(records):
    """Time average of the population mean weight, (1/n) sum_k g_k.

    Identical (bit for bit) to the lag-0 ratio of a LaggedAccumulator fed
    the same g values as a test function, since both Kahan-sum the same
    sequence and divide by the exact window count.
    """
    acc = KahanSum()
    n = 0
    for r in records:
        acc.add(r.g)
        n += 1
    if n == 0:
        raise InsufficientDataError("empty record stream")
    return acc.total / n


def independent_ratio(records_a, records_b, lags, phi_index=0):
    """Per-lag ratio with numerator windows from stream a and denominator
    windows from an independent stream b, over identically aligned k-ranges."""
    if len(records_a) != len(records_b):
        raise ValueError(
            f"record streams differ in length: {len(records_a)} vs {len(records_b)}")
    lags = sorted(set(int(l) for l in lags))
    n_windows = len(records_a) - lags[-1]
    if n_windows < 1:
        raise InsufficientDataError("streams shorter than the largest lag")
    g_a, f_a = records_to_arrays(records_a)
    g_b, f_b = records_to_arrays(records_b)
    num_a, _ = lagged_window_sums(g_a, f_a, lags, n_windows)
    _, den_b = lagged_window_sums(g_b, f_b, lags, n_windows)
    return num_a[:, phi_index] / den_b


def batch_means_variance(records, lag, phi_index=0, batch_count=None):
    """Full-sample ratio and a batch-means estimate of its variance.

    Splits the window-start range into batch_count contiguous batches,
    takes per-batch (numerator, denominator) means, and applies the delta
    method for the ratio across batches.  Returns (ratio, var) where var
    estimates the variance of the ratio itself (sigma^2 / n in CLT scaling).
    """
    lag = int(lag)
    K = len(records) - lag
    if K < 2:
        raise InsufficientDataError("need at least two complete windows")
    if batch_count is None:
        batch_count = int(math.floor(math.sqrt(K)))
    if batch_count < 2:
        raise InsufficientDataError("batch_count must be >= 2")
    m = K // batch_count
    if m < 1:
        raise InsufficientDataError(
            f"{K} windows cannot fill {batch_count} nonempty batches")
    used = m * batch_count
    g, f = records_to_arrays(records)
    S = np.concatenate(([0.0], np.cumsum(np.log(g))))
    k = np.arange(used)
    den_k = np.exp(S[k + lag] - S[k])
    num_k = f[k + lag, phi_index] * den_k
    num_b = num_k.reshape(batch_count, m).mean(axis=1)
    den_b = den_k.reshape(batch_count, m).mean(axis=1)
    ratio = num_k.sum() / den_k.sum()
    lin = (num_b - ratio * den_b) / den_k.mean()
    sigma2 = float(m * np.var(lin, ddof=1))
    return float(ratio), sigma2 / used


def records_to_csv(records, path):
    """Dump a record stream as CSV with columns step, g, f_0..f_J."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n_phi = records[0].f.shape[0] if records else 0
        writer.writerow(["step", "g"] + [f"f_{j}" for j in range(n_phi)])
        for r in records:
            writer.writerow([r.step_index, f"{r.g:.17g}"]
                            + [f"{v:.17g}" for v in r.f])


def records_from_csv(path):
    """Load a record stream written by records_to_csv."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["step", "g"]:
            raise ValueError(f"unexpected header {header!r}")
        for row in reader:
            out.append(StepRecord(step_index=int(row[0]), g=float(row[1]),
                                  f=np.array([float(v) for v in row[2:]])))
    return out
