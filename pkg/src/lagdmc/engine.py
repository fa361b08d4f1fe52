"""The interacting walker engine: one population, one selection/mutation
transition, replayable randomness.

Selection is per-slot categorical (each of the N slots independently picks
a parent with probability proportional to its weight) and happens every
step unconditionally.  Mutation moves every selected walker independently
with the model kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class WeightError(ValueError):
    """A selection weight is non-positive or non-finite."""


@dataclass(frozen=True)
class Population:
    """N walker states at one time index."""

    walkers: np.ndarray
    step_index: int

    def __post_init__(self):
        object.__setattr__(self, "walkers", np.asarray(self.walkers))
        if self.walkers.shape[0] < 1:
            raise ValueError("population must contain at least one walker")

    @property
    def N(self):
        return self.walkers.shape[0]


def init_population(model, N, rng):
    """N independent initial draws at step index 0."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if hasattr(model, "draw_initial_batch"):
        walkers = model.draw_initial_batch(rng, N)
    else:
        walkers = np.array([model.draw_initial(rng) for _ in range(N)])
    return Population(walkers=walkers, step_index=0)


def population_weights(model, population):
    """Per-walker weights G(xi^i), validated positive and finite."""
    if hasattr(model, "potential_batch"):
        w = np.asarray(model.potential_batch(population.walkers), dtype=float)
    else:
        w = np.array([model.potential(s) for s in population.walkers], dtype=float)
    _check_weights(w)
    return w


def _check_weights(weights):
    bad = ~(np.isfinite(weights) & (weights > 0))
    if np.any(bad):
        i = int(np.argwhere(bad)[0][0])
        raise WeightError(f"walker {i} has invalid weight {weights[i]}")


def selection(weights, rng):
    """N i.i.d. categorical parent indices with probabilities weights / sum."""
    weights = np.asarray(weights, dtype=float)
    _check_weights(weights)
    N = weights.shape[0]
    cumw = np.cumsum(weights)
    idx = np.searchsorted(cumw, rng.random(N) * cumw[-1], side="right")
    return np.minimum(idx, N - 1)


def mutation(model, parents, rng):
    """One independent kernel draw from each parent state."""
    parents = np.asarray(parents)
    if hasattr(model, "kernel_draw_batch"):
        return model.kernel_draw_batch(rng, parents)
    return np.array([model.kernel_draw(rng, s) for s in parents])


def step(model, population, rng):
    """One selection/mutation transition of the whole population."""
    weights = population_weights(model, population)
    parents = selection(weights, rng)
    walkers = mutation(model, population.walkers[parents], rng)
    return Population(walkers=walkers, step_index=population.step_index + 1)
