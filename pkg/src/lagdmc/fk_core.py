"""Exact weighted-semigroup computations on finite state spaces.

Everything here is deterministic linear algebra on an explicit stochastic
matrix M and a positive weight vector G.  These routines act as the
correctness oracle for the stochastic walker engine: the nonlinear
population map, its iterated ratio limits, the dominant eigentriple and,
for tiny instances, exact enumeration of the N-walker system's law.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

_ROW_SUM_TOL = 1e-12


class ModelValidationError(ValueError):
    """A finite model's matrix, weights or initial law is malformed."""


class ConvergenceError(RuntimeError):
    """Power iteration failed to reach the requested residual."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class EnumerationLimitError(ValueError):
    """Exact enumeration would exceed the configuration budget."""


@dataclass(frozen=True)
class FiniteFkModel:
    """Explicit d-state model: stochastic matrix M, weights G, initial law."""

    M: np.ndarray
    G: np.ndarray
    eta0: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        G = np.asarray(self.G, dtype=float)
        eta0 = np.asarray(self.eta0, dtype=float)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "eta0", eta0)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ModelValidationError(f"M must be square, got shape {M.shape}")
        d = M.shape[0]
        if G.shape != (d,):
            raise ModelValidationError(f"G must have length {d}, got shape {G.shape}")
        if eta0.shape != (d,):
            raise ModelValidationError(f"eta0 must have length {d}, got shape {eta0.shape}")
        if np.any(M < 0):
            i, j = np.argwhere(M < 0)[0]
            raise ModelValidationError(f"M[{i}][{j}] = {M[i, j]} is negative")
        rowsums = M.sum(axis=1)
        bad = np.where(np.abs(rowsums - 1.0) > _ROW_SUM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise ModelValidationError(f"row {i} of M sums to {rowsums[i]!r}, expected 1")
        if not np.all(np.isfinite(G)) or np.any(G <= 0):
            i = int(np.where(~(np.isfinite(G) & (G > 0)))[0][0])
            raise ModelValidationError(f"G[{i}] = {G[i]} is not finite and positive")
        if np.any(eta0 < 0):
            i = int(np.argwhere(eta0 < 0)[0][0])
            raise ModelValidationError(f"eta0[{i}] = {eta0[i]} is negative")
        if abs(eta0.sum() - 1.0) > _ROW_SUM_TOL:
            raise ModelValidationError(f"eta0 sums to {eta0.sum()!r}, expected 1")

    @property
    def d(self):
        return self.M.shape[0]

    @classmethod
    def from_dict(cls, doc):
        missing = {"M", "G", "eta0"} - set(doc)
        if missing:
            raise ModelValidationError(f"missing keys: {sorted(missing)}")
        return cls(np.asarray(doc["M"], dtype=float),
                   np.asarray(doc["G"], dtype=float),
                   np.asarray(doc["eta0"], dtype=float))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class MeasureVector:
    """Non-negative weight vector, optionally normalized to total mass 1."""

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0):
            raise ModelValidationError("measure weights must be non-negative")
        if self.normalized and abs(w.sum() - 1.0) > _ROW_SUM_TOL:
            raise ModelValidationError(f"normalized measure sums to {w.sum()!r}")

    def __call__(self, phi):
        return float(self.weights @ np.asarray(phi, dtype=float))


@dataclass(frozen=True)
class Eigentriple:
    """Dominant eigenvalue of Q with right/left eigenvectors and residual."""

    lam: float
    h: np.ndarray
    eta_inf: np.ndarray
    residual: float
    iterations: int = field(default=0, compare=False)


def q_apply(model, phi):
    """Apply the weighted transition operator: x -> G(x) * sum_y M(x,y) phi(y)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (model.d,):
        raise ValueError(f"phi must have length {model.d}, got shape {phi.shape}")
    return model.G * (model.M @ phi)


def phi_map(model, eta):
    """One step of the nonlinear measure evolution: reweight by G, then move by M."""
    w = eta.weights if isinstance(eta, MeasureVector) else np.asarray(eta, dtype=float)
    gw = w * model.G
    mass = gw.sum()
    if mass <= 0:
        raise ZeroDivisionError("degenerate measure: eta(G) = 0")
    return MeasureVector((gw @ model.M) / mass, normalized=True)


def exact_eta_sequence(model, n):
    """Normalized measures eta_0..eta_n with each step's mean weight eta_k(G).

    The running total mass of the unnormalized sequence is the product of
    the returned mean weights; accumulate it in log space.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    eta = MeasureVector(model.eta0 / model.eta0.sum(), normalized=True)
    out = [(eta, eta(model.G))]
    for _ in range(n):
        eta = phi_map(model, eta)
        out.append((eta, eta(model.G)))
    return out


def log_total_mass(model, n):
    """log gamma_n(1) = sum_{p<n} log eta_p(G), accumulated exactly via math.fsum."""
    seq = exact_eta_sequence(model, max(n - 1, 0))
    return math.fsum(math.log(g) for _, g in seq[:n])


def lag_limit(model, mu, l, phi):
    """Ratio mu Q^l(phi) / mu Q^l(1), the l-step pushforward of mu evaluated at phi."""
    if l < 0:
        raise ValueError("lag must be >= 0")
    w = mu.weights if isinstance(mu, MeasureVector) else np.asarray(mu, dtype=float)
    num = np.asarray(phi, dtype=float)
    den = np.ones(model.d)
    for _ in range(l):
        num = q_apply(model, num)
        den = q_apply(model, den)
    return float(w @ num) / float(w @ den)


def power_iteration(model, tol=1e-12, max_iters=10**6):
    """Dominant eigentriple of Q = diag(G) M by simultaneous left/right iteration.

    h is sup-norm normalized, eta_inf normalized to total mass 1, and the
    eigenvalue is read off as eta_inf(G) at convergence.  Convergence is
    declared on the max of the left and right residuals.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = model.d
    h = np.ones(d)
    eta = np.full(d, 1.0 / d)
    lam = float(eta @ model.G)
    for it in range(1, max_iters + 1):
        h_new = q_apply(model, h)
        h_new /= np.max(np.abs(h_new))
        eta_new = (eta * model.G) @ model.M
        eta_new /= eta_new.sum()
        lam = float(eta_new @ model.G)
        res_r = float(np.max(np.abs(q_apply(model, h_new) - lam * h_new)))
        res_l = float(np.sum(np.abs((eta_new * model.G) @ model.M - lam * eta_new)))
        residual = max(res_r, res_l)
        h, eta = h_new, eta_new
        if residual <= tol:
            return Eigentriple(lam=lam, h=h, eta_inf=eta, residual=residual, iterations=it)
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {max_iters} iterations "
        f"(residual {residual})", residual)


def _population_law(model, pop):
    """Distribution of one child walker given a parent population (tuple of states)."""
    counts = np.bincount(pop, minlength=model.d)
    m = counts / len(pop)
    return phi_map(model, MeasureVector(m, normalized=True)).weights


def exact_particle_expectation(model, N, n, statistic, max_configs=10**7):
    """Exact expectation of a trajectory functional of the N-walker system.

    Enumerates every trajectory (xi_0, ..., xi_n) of the walker system,
    weighting each by the product of one-walker conditional laws, and sums
    statistic(trajectory) against those probabilities.  Only viable for
    tiny instances; guarded by max_configs.
    """
    d = model.d
    n_configs = (d ** N) ** (n + 1)
    if n_configs > max_configs:
        raise EnumerationLimitError(
            f"{n_configs} trajectories exceed the enumeration budget {max_configs}")
    pops = list(itertools.product(range(d), repeat=N))
    pop_arrays = [np.array(p, dtype=np.intp) for p in pops]
    eta0 = model.eta0 / model.eta0.sum()
    init_prob = {i: float(np.prod(eta0[a])) for i, a in enumerate(pop_arrays)}
    # one-step transition probabilities between populations
    child_law = [_population_law(model, a) for a in pop_arrays]
    trans = np.empty((len(pops), len(pops)))
    for i, law in enumerate(child_law):
        for j, a in enumerate(pop_arrays):
            trans[i, j] = float(np.prod(law[a]))
    total = 0.0
    for path in itertools.product(range(len(pops)), repeat=n + 1):
        p = init_prob[path[0]]
        for a, b in zip(path, path[1:]):
            p *= trans[a, b]
        if p == 0.0:
            continue
        total += p * statistic([pop_arrays[i] for i in path])
    return total


def gamma_statistic(model, phi):
    """Trajectory functional gamma^N_n(phi): terminal phi-average times the
    running product of population mean weights."""
    phi = np.asarray(phi, dtype=float)

    def stat(trajectory):
        value = float(np.mean(phi[trajectory[-1]]))
        for pop in trajectory[:-1]:
            value *= float(np.mean(model.G[pop]))
        return value

    return stat


def eta_statistic(model, phi):
    """Trajectory functional eta^N_n(phi): terminal population phi-average."""
    phi = np.asarray(phi, dtype=float)

    def stat(trajectory):
        return float(np.mean(phi[trajectory[-1]]))

    return stat
