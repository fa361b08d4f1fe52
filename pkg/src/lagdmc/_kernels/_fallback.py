"""Pure numpy implementations of the hot trajectory and windowing kernels.

Selected at import time when the compiled extension is unavailable (or
forced via LAGDMC_FORCE_FALLBACK=1).  Semantics match the compiled
versions; bit-level agreement across backends is not promised.
"""

from __future__ import annotations

import numpy as np


def finite_chain(cum_rows, g_vec, phi_mat, states0, u_sel, u_mut):
    """Run a finite-state walker chain, recording population averages.

    cum_rows: (d, d) cumulative transition rows.
    g_vec: (d,) weights; phi_mat: (J, d) test-function values.
    states0: (N,) initial walker states.
    u_sel, u_mut: (T, N) uniforms; one row per step.

    Returns (g, f, states) with g of length T+1, f of shape (T+1, J) and
    the final walker states.
    """
    T = u_sel.shape[0]
    N = states0.shape[0]
    d = g_vec.shape[0]
    states = np.array(states0, dtype=np.intp)
    g = np.empty(T + 1)
    f = np.empty((T + 1, phi_mat.shape[0]))
    for p in range(T + 1):
        g[p] = g_vec[states].mean()
        f[p] = phi_mat[:, states].mean(axis=1)
        if p == T:
            break
        w = g_vec[states]
        cumw = np.cumsum(w)
        parents = np.searchsorted(cumw, u_sel[p] * cumw[-1], side="right")
        parents = np.minimum(parents, N - 1)
        states = _rows_draw(cum_rows, states[parents], u_mut[p], d)
    return g, f, states


def _rows_draw(cum_rows, parent_states, u, d):
    # rowwise inverse-CDF draw: one uniform per walker against its parent row
    picked = cum_rows[parent_states]
    idx = (u[:, None] >= picked).sum(axis=1)
    return np.minimum(idx, d - 1).astype(np.intp)


def gaussian_chain(x0, mean_factor, noise_scale, w_c0, w_c2, u_sel, z_mut):
    """Run a real-valued walker chain with Gaussian moves and log-quadratic
    weights w(x) = exp(w_c0 + w_c2 * x^2).

    Covers the plain Brownian kernel (mean_factor=1) and the linear-drift
    kernel (mean_factor=e^{-alpha tau} or its Euler version).

    Returns (g, x) with g of length T+1 and the final walker positions.
    """
    T = u_sel.shape[0]
    N = x0.shape[0]
    x = np.array(x0, dtype=float)
    g = np.empty(T + 1)
    for p in range(T + 1):
        w = np.exp(w_c0 + w_c2 * x * x)
        g[p] = w.mean()
        if p == T:
            break
        cumw = np.cumsum(w)
        parents = np.searchsorted(cumw, u_sel[p] * cumw[-1], side="right")
        parents = np.minimum(parents, N - 1)
        x = mean_factor * x[parents] + noise_scale * z_mut[p]
    return g, x


def lagged_sums(g, f, lags, n_windows):
    """Window sums of the lagged path functionals over one record stream.

    For each lag l and each of the first n_windows window starts k,
    accumulates f[k+l] * prod_{q=k}^{k+l-1} g[q] into num and the bare
    window product into den.  Products go through log prefix sums.

    Returns (num, den) with num of shape (L, J) and den of length L.
    """
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    lags = np.asarray(lags, dtype=np.intp)
    S = np.concatenate(([0.0], np.cumsum(np.log(g))))
    num = np.empty((lags.shape[0], f.shape[1]))
    den = np.empty(lags.shape[0])
    for i, l in enumerate(lags):
        if n_windows + l > g.shape[0]:
            raise ValueError(
                f"lag {l} needs {n_windows + l} records, have {g.shape[0]}")
        k = np.arange(n_windows)
        prod = np.exp(S[k + l] - S[k])
        den[i] = prod.sum()
        num[i] = prod @ f[k + l]
    return num, den
