# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory and windowing kernels.

Same call signatures as the numpy fallback; the sequential per-step loops
dominate runtime, which is why these live in C.  lagged_sums uses Kahan
compensation for the prefix sums and the window accumulators.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def finite_chain(double[:, ::1] cum_rows, double[::1] g_vec,
                 double[:, ::1] phi_mat, cnp.intp_t[::1] states0,
                 double[:, ::1] u_sel, double[:, ::1] u_mut):
    cdef Py_ssize_t T = u_sel.shape[0]
    cdef Py_ssize_t N = states0.shape[0]
    cdef Py_ssize_t d = g_vec.shape[0]
    cdef Py_ssize_t J = phi_mat.shape[0]
    cdef cnp.ndarray g_arr = np.empty(T + 1, dtype=np.float64)
    cdef cnp.ndarray f_arr = np.empty((T + 1, J), dtype=np.float64)
    cdef cnp.ndarray states_arr = np.array(states0, dtype=np.intp)
    cdef cnp.ndarray scratch_arr = np.empty(N, dtype=np.intp)
    cdef double[::1] g = g_arr
    cdef double[:, ::1] f = f_arr
    cdef cnp.intp_t[::1] states = states_arr
    cdef cnp.intp_t[::1] nxt = scratch_arr
    cdef double[::1] cumw = np.empty(N, dtype=np.float64)
    cdef Py_ssize_t p, i, j, k, parent, s
    cdef double acc, t, u

    for p in range(T + 1):
        acc = 0.0
        for i in range(N):
            acc += g_vec[states[i]]
        g[p] = acc / N
        for j in range(J):
            acc = 0.0
            for i in range(N):
                acc += phi_mat[j, states[i]]
            f[p, j] = acc / N
        if p == T:
            break
        acc = 0.0
        for i in range(N):
            acc += g_vec[states[i]]
            cumw[i] = acc
        for i in range(N):
            t = u_sel[p, i] * cumw[N - 1]
            parent = 0
            while parent < N - 1 and cumw[parent] <= t:
                parent += 1
            s = states[parent]
            u = u_mut[p, i]
            k = 0
            while k < d - 1 and u >= cum_rows[s, k]:
                k += 1
            nxt[i] = k
        for i in range(N):
            states[i] = nxt[i]
    return g_arr, f_arr, states_arr


def gaussian_chain(double[::1] x0, double mean_factor, double noise_scale,
                   double w_c0, double w_c2,
                   double[:, ::1] u_sel, double[:, ::1] z_mut):
    cdef Py_ssize_t T = u_sel.shape[0]
    cdef Py_ssize_t N = x0.shape[0]
    cdef cnp.ndarray g_arr = np.empty(T + 1, dtype=np.float64)
    cdef cnp.ndarray x_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] g = g_arr
    cdef double[::1] x = x_arr
    cdef double[::1] w = np.empty(N, dtype=np.float64)
    cdef double[::1] cumw = np.empty(N, dtype=np.float64)
    cdef double[::1] xn = np.empty(N, dtype=np.float64)
    cdef Py_ssize_t p, i, parent
    cdef double acc, t

    for p in range(T + 1):
        acc = 0.0
        for i in range(N):
            w[i] = exp(w_c0 + w_c2 * x[i] * x[i])
            acc += w[i]
        g[p] = acc / N
        if p == T:
            break
        acc = 0.0
        for i in range(N):
            acc += w[i]
            cumw[i] = acc
        for i in range(N):
            t = u_sel[p, i] * cumw[N - 1]
            parent = 0
            while parent < N - 1 and cumw[parent] <= t:
                parent += 1
            xn[i] = mean_factor * x[parent] + noise_scale * z_mut[p, i]
        for i in range(N):
            x[i] = xn[i]
    return g_arr, x_arr


def lagged_sums(double[::1] g, double[:, ::1] f, cnp.intp_t[::1] lags,
                Py_ssize_t n_windows):
    cdef Py_ssize_t n_rec = g.shape[0]
    cdef Py_ssize_t L = lags.shape[0]
    cdef Py_ssize_t J = f.shape[1]
    cdef Py_ssize_t i, j, k, l
    for i in range(L):
        if n_windows + lags[i] > n_rec:
            raise ValueError(
                "lag %d needs %d records, have %d" % (lags[i], n_windows + lags[i], n_rec))
    # Kahan-compensated log prefix sums: S[p] = sum_{q<p} log g[q]
    cdef double[::1] S = np.empty(n_rec + 1, dtype=np.float64)
    cdef double total = 0.0, carry = 0.0, y, tt
    S[0] = 0.0
    for k in range(n_rec):
        y = log(g[k]) - carry
        tt = total + y
        carry = (tt - total) - y
        total = tt
        S[k + 1] = total
    cdef cnp.ndarray num_arr = np.zeros((L, J), dtype=np.float64)
    cdef cnp.ndarray den_arr = np.zeros(L, dtype=np.float64)
    cdef double[:, ::1] num = num_arr
    cdef double[::1] den = den_arr
    cdef double[::1] ncarry = np.zeros(J, dtype=np.float64)
    cdef double prod, dcarry, base
    for i in range(L):
        l = lags[i]
        dcarry = 0.0
        for j in range(J):
            ncarry[j] = 0.0
        for k in range(n_windows):
            prod = exp(S[k + l] - S[k])
            y = prod - dcarry
            tt = den[i] + y
            dcarry = (tt - den[i]) - y
            den[i] = tt
            for j in range(J):
                base = f[k + l, j] * prod
                y = base - ncarry[j]
                tt = num[i, j] + y
                ncarry[j] = (tt - num[i, j]) - y
                num[i, j] = tt
    return num_arr, den_arr
