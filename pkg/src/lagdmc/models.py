"""Concrete walker models: the harmonic-oscillator benchmark, its
importance-sampled (guided) variant, and an adapter that lets any finite
model drive the sampling engine.

A model supplies three things: an initial draw, a one-step kernel draw and
a strictly positive weight.  Batch variants operate on numpy arrays of
walker states; the engine prefers those.  Models are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np


class ModelConfigError(ValueError):
    """Bad model parameters at construction time."""


@runtime_checkable
class SimulatableFkModel(Protocol):
    name: str

    def draw_initial(self, rng): ...
    def kernel_draw(self, rng, state): ...
    def potential(self, state): ...


@dataclass(frozen=True)
class HarmonicOscillatorModel:
    """Brownian kernel over time step tau with weight exp(-tau x^2 / 2).

    The weight is exp(-tau V) for the oscillator potential V = m w^2 x^2 / 2;
    m and w default to 1 as in the benchmark setting.
    """

    tau: float = 1.0 / 16.0
    omega: float = 1.0
    mass: float = 1.0
    initial_mean: float = 0.0
    initial_std: float = 1.0
    name: str = field(default="harmonic_oscillator")

    def __post_init__(self):
        if self.tau <= 0:
            raise ModelConfigError(f"tau must be positive, got {self.tau}")
        if self.omega <= 0 or self.mass <= 0:
            raise ModelConfigError("omega and mass must be positive")
        if self.initial_std <= 0:
            raise ModelConfigError("initial_std must be positive")

    def draw_initial(self, rng):
        return self.initial_mean + self.initial_std * rng.standard_normal()

    def draw_initial_batch(self, rng, n):
        return self.initial_mean + self.initial_std * rng.standard_normal(n)

    def kernel_draw(self, rng, state):
        return state + math.sqrt(self.tau) * rng.standard_normal()

    def kernel_draw_batch(self, rng, states):
        return states + math.sqrt(self.tau) * rng.standard_normal(states.shape[0])

    def potential(self, state):
        return math.exp(-0.5 * self.tau * self.mass * self.omega**2 * state * state)

    def potential_batch(self, states):
        return np.exp(-0.5 * self.tau * self.mass * self.omega**2 * states * states)

    def chain_params(self):
        """(mean_factor, noise_scale, w_c0, w_c2) for the compiled chain kernel."""
        return 1.0, math.sqrt(self.tau), 0.0, -0.5 * self.tau * self.mass * self.omega**2


@dataclass(frozen=True)
class GuidedHOModel:
    """Importance-sampled oscillator with Gaussian guide exp(-alpha x^2 / 2).

    The guided kernel has linear drift -alpha x; in "exact-ou" mode the
    transition over time tau is sampled exactly, in "euler" mode by a
    single Euler step.  The weight is exp(-tau E_L) with local energy
    E_L(x) = alpha/2 + (1 - alpha^2) x^2 / 2; at alpha = 1 the guide is the
    exact ground state and the weight is constant.
    """

    tau: float = 1.0 / 16.0
    alpha: float = 1.0
    kernel_mode: str = "exact-ou"
    initial_mean: float = 0.0
    initial_std: float = 1.0
    name: str = field(default="guided_harmonic_oscillator")

    def __post_init__(self):
        if self.tau <= 0:
            raise ModelConfigError(f"tau must be positive, got {self.tau}")
        if self.alpha <= 0:
            raise ModelConfigError(f"alpha must be positive, got {self.alpha}")
        if self.kernel_mode not in ("exact-ou", "euler"):
            raise ModelConfigError(f"unknown kernel_mode {self.kernel_mode!r}")
        if self.initial_std <= 0:
            raise ModelConfigError("initial_std must be positive")

    def local_energy(self, x):
        return 0.5 * self.alpha + 0.5 * (1.0 - self.alpha**2) * x * x

    def _moments(self):
        if self.kernel_mode == "exact-ou":
            mean_factor = math.exp(-self.alpha * self.tau)
            var = (1.0 - math.exp(-2.0 * self.alpha * self.tau)) / (2.0 * self.alpha)
            return mean_factor, math.sqrt(var)
        return 1.0 - self.alpha * self.tau, math.sqrt(self.tau)

    def draw_initial(self, rng):
        return self.initial_mean + self.initial_std * rng.standard_normal()

    def draw_initial_batch(self, rng, n):
        return self.initial_mean + self.initial_std * rng.standard_normal(n)

    def kernel_draw(self, rng, state):
        mean_factor, scale = self._moments()
        return mean_factor * state + scale * rng.standard_normal()

    def kernel_draw_batch(self, rng, states):
        mean_factor, scale = self._moments()
        return mean_factor * states + scale * rng.standard_normal(states.shape[0])

    def potential(self, state):
        return math.exp(-self.tau * self.local_energy(state))

    def potential_batch(self, states):
        return np.exp(-self.tau * (0.5 * self.alpha
                                   + 0.5 * (1.0 - self.alpha**2) * states * states))

    def chain_params(self):
        mean_factor, scale = self._moments()
        return (mean_factor, scale,
                -0.5 * self.tau * self.alpha,
                -0.5 * self.tau * (1.0 - self.alpha**2))


@dataclass(frozen=True)
class FiniteModelSampler:
    """Sampling view of an explicit finite model: categorical rows of M,
    weight lookup in G, initial draw from eta0."""

    model: object  # fk_core.FiniteFkModel
    name: str = field(default="finite")

    def _cum_eta0(self):
        return np.cumsum(self.model.eta0 / self.model.eta0.sum())

    def cum_rows(self):
        return np.cumsum(self.model.M, axis=1)

    def draw_initial(self, rng):
        return int(np.searchsorted(self._cum_eta0(), rng.random(), side="right"))

    def draw_initial_batch(self, rng, n):
        idx = np.searchsorted(self._cum_eta0(), rng.random(n), side="right")
        return np.minimum(idx, self.model.d - 1).astype(np.intp)

    def kernel_draw(self, rng, state):
        row = np.cumsum(self.model.M[state])
        return int(min(np.searchsorted(row, rng.random(), side="right"),
                       self.model.d - 1))

    def kernel_draw_batch(self, rng, states):
        cum = self.cum_rows()[states]
        idx = (rng.random(states.shape[0])[:, None] >= cum).sum(axis=1)
        return np.minimum(idx, self.model.d - 1).astype(np.intp)

    def potential(self, state):
        return float(self.model.G[state])

    def potential_batch(self, states):
        return self.model.G[states]


def finite_adapter(model):
    """Expose a FiniteFkModel through the sampling interface."""
    return FiniteModelSampler(model=model)
