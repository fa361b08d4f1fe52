"""Turn a model plus an RNG stream into a record stream (g_p, f_p[j]).

Gaussian-weight models and finite models run through the kernel backend
(compiled extension or numpy fallback); anything else falls back to the
generic per-step engine.  Within one backend the draw order is fixed, so
identical stream triples reproduce identical records bit for bit.
"""

from __future__ import annotations

import numpy as np

from . import _kernels, engine
from .estimators import StepRecord
from .models import FiniteModelSampler


class InvalidTestFunction(ValueError):
    """A test-function spec is not valid for the given model."""


def resolve_finite_phis(model, specs):
    """Test-function vectors for a finite model.

    Accepted specs: "G" (the weight vector), {"indicator": [states...]},
    {"vector": [...]} with one value per state.
    """
    d = model.d
    rows = []
    names = []
    for s in specs:
        if s == "G":
            rows.append(np.asarray(model.G, dtype=float))
            names.append("G")
        elif isinstance(s, dict) and "indicator" in s:
            v = np.zeros(d)
            v[np.asarray(s["indicator"], dtype=int)] = 1.0
            rows.append(v)
            names.append(f"indicator{tuple(s['indicator'])}")
        elif isinstance(s, dict) and "vector" in s:
            v = np.asarray(s["vector"], dtype=float)
            if v.shape != (d,):
                raise InvalidTestFunction(f"vector length {v.shape} != state count {d}")
            rows.append(v)
            names.append("vector")
        else:
            raise InvalidTestFunction(f"unsupported test function {s!r} for finite model")
    return names, np.array(rows)


def simulate_stream(model, N, n_records, rng, test_functions=("G",)):
    """Simulate n_records population records; returns (g, f) arrays with
    g of length n_records and f of shape (n_records, J)."""
    if n_records < 1:
        raise ValueError("need at least one record")
    T = n_records - 1
    if isinstance(model, FiniteModelSampler):
        _, phi_mat = resolve_finite_phis(model.model, test_functions)
        states0 = model.draw_initial_batch(rng, N)
        u_sel = rng.random((T, N))
        u_mut = rng.random((T, N))
        g, f, _ = _kernels.finite_chain(model.cum_rows(), np.asarray(model.model.G, float),
                                        phi_mat, states0, u_sel, u_mut)
        return g, f
    if hasattr(model, "chain_params") and tuple(test_functions) == ("G",):
        mean_factor, noise_scale, w_c0, w_c2 = model.chain_params()
        x0 = np.asarray(model.draw_initial_batch(rng, N), dtype=float)
        u_sel = rng.random((T, N))
        z_mut = rng.standard_normal((T, N))
        g, _ = _kernels.gaussian_chain(x0, mean_factor, noise_scale, w_c0, w_c2,
                                       u_sel, z_mut)
        return g, g[:, None].copy()
    return _simulate_generic(model, N, n_records, rng, test_functions)


def _simulate_generic(model, N, n_records, rng, test_functions):
    evals = _generic_phis(model, test_functions)
    pop = engine.init_population(model, N, rng)
    g = np.empty(n_records)
    f = np.empty((n_records, len(evals)))
    for p in range(n_records):
        w = engine.population_weights(model, pop)
        g[p] = w.mean()
        for j, fn in enumerate(evals):
            f[p, j] = fn(pop.walkers, w)
        if p < n_records - 1:
            pop = engine.step(model, pop, rng)
    return g, f


def _generic_phis(model, specs):
    evals = []
    for s in specs:
        if s == "G":
            evals.append(lambda walkers, w: w.mean())
        elif callable(s):
            fn = s
            evals.append(lambda walkers, w, fn=fn: float(np.mean(fn(walkers))))
        else:
            raise InvalidTestFunction(f"unsupported test function {s!r} for this model")
    return evals


def stream_to_records(g, f):
    """Wrap simulated arrays as StepRecord objects for the streaming API."""
    return [StepRecord(step_index=p, g=float(g[p]), f=f[p]) for p in range(len(g))]
