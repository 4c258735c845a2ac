# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled projected-gradient path walk (see _cauchy_py for the contract)."""

from libc.math cimport INFINITY, fabs, sqrt

import numpy as np

cdef double _EPS = 2.220446049250313e-16


cdef Py_ssize_t _prune(double[::1] alpha, const double[::1] grad,
                       const double[:, ::1] data, unsigned char[::1] inactive,
                       double[::1] s_cols, double[::1] g_cols,
                       double* g_sum, Py_ssize_t* n_free) noexcept:
    # Fix every zero weight with an outward direction component; repeat with
    # the mean held fixed per round (monotone closure, same least fixed
    # point as one-at-a-time processing).
    cdef Py_ssize_t i, k, dropped = 0, round_dropped
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t n = alpha.shape[0]
    cdef double mu
    while n_free[0] > 1:
        mu = g_sum[0] / n_free[0]
        round_dropped = 0
        for i in range(n):
            if inactive[i] and alpha[i] <= 0.0 and grad[i] > mu:
                alpha[i] = 0.0
                inactive[i] = 0
                g_sum[0] -= grad[i]
                for k in range(d):
                    g_cols[k] -= grad[i] * data[i, k]
                    s_cols[k] -= data[i, k]
                n_free[0] -= 1
                round_dropped += 1
        if round_dropped == 0:
            break
        dropped += round_dropped
    return dropped


def cauchy_walk(double[::1] alpha, const double[::1] grad,
                const double[:, ::1] data, double[::1] resid,
                const double[::1] col_sums, const double[::1] grad_cols):
    """Drop-in compiled equivalent of hullproj._cauchy_py.cauchy_walk."""
    cdef Py_ssize_t n = alpha.shape[0]
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t i, k, j, jmax
    cdef Py_ssize_t bends = 0
    cdef Py_ssize_t n_free = n
    cdef double g_sum = 0.0
    cdef double mu, rw, curv, rr, wsc, scale_k, wk, t_bound, t_star, pi, ratio
    cdef double gj, shift, amax

    scratch = np.empty(3 * d + n, dtype=np.float64)
    cdef double[::1] s_cols = scratch[:d]
    cdef double[::1] g_cols = scratch[d:2 * d]
    cdef double[::1] w = scratch[2 * d:3 * d]
    cdef double[::1] p = scratch[3 * d:]
    inact_arr = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] inactive = inact_arr

    for k in range(d):
        s_cols[k] = col_sums[k]
        g_cols[k] = grad_cols[k]
    for i in range(n):
        g_sum += grad[i]

    bends += _prune(alpha, grad, data, inactive, s_cols, g_cols, &g_sum, &n_free)
    while True:
        mu = g_sum / n_free
        rw = 0.0
        curv = 0.0
        rr = 0.0
        wsc = 0.0
        for k in range(d):
            wk = mu * s_cols[k] - g_cols[k]
            w[k] = wk
            rw += resid[k] * wk
            curv += wk * wk
            rr += resid[k] * resid[k]
            scale_k = fabs(mu * s_cols[k]) + fabs(g_cols[k])
            wsc += scale_k * scale_k
        # w comes from a difference of like-sized terms, so below the
        # cancellation floor it is pure noise and the slope sign is
        # meaningless; stepping rw/curv there corrupts the walk.
        if rw <= 64.0 * _EPS * sqrt(wsc * rr):
            break
        j = -1
        t_bound = INFINITY
        for i in range(n):
            if inactive[i]:
                pi = mu - grad[i]
                p[i] = pi
                if pi < 0.0 and alpha[i] > 0.0:
                    ratio = alpha[i] / (-pi)
                    if ratio < t_bound:
                        t_bound = ratio
                        j = i
            else:
                p[i] = 0.0
        if curv > 0.0 and rw / curv <= t_bound:
            t_star = rw / curv
            for i in range(n):
                if inactive[i]:
                    alpha[i] += t_star * p[i]
                    if alpha[i] < 0.0:
                        alpha[i] = 0.0
            for k in range(d):
                resid[k] -= t_star * w[k]
            break
        if j < 0 or n_free <= 1:
            break
        for i in range(n):
            if inactive[i]:
                alpha[i] += t_bound * p[i]
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
        for k in range(d):
            resid[k] -= t_bound * w[k]
        alpha[j] = 0.0
        inactive[j] = 0
        gj = grad[j]
        g_sum -= gj
        for k in range(d):
            g_cols[k] -= gj * data[j, k]
            s_cols[k] -= data[j, k]
        n_free -= 1
        bends += 1
        bends += _prune(alpha, grad, data, inactive, s_cols, g_cols, &g_sum, &n_free)

    # Round-off repair: pin the weight sum back to one on the largest weight.
    shift = 1.0
    for i in range(n):
        shift -= alpha[i]
    if shift != 0.0:
        jmax = 0
        amax = alpha[0]
        for i in range(1, n):
            if alpha[i] > amax:
                amax = alpha[i]
                jmax = i
        alpha[jmax] += shift
        for k in range(d):
            resid[k] -= shift * data[jmax, k]
    return bends
