"""Numpy implementation of the projected-gradient path walk.

Fallback for the compiled module ``hullproj._cauchy``; both expose the same
``cauchy_walk`` contract and are cross-checked in tests/test_kernels.py.
"""

import numpy as np

_EPS = float(np.finfo(np.float64).eps)


def cauchy_walk(alpha, grad, data, resid, col_sums, grad_cols):
    """Walk the bent sum-zero steepest-descent path to its exact minimizer.

    The path starts along the gradient re-centred to sum to zero; whenever a
    coordinate reaches zero it is fixed there and the direction is re-centred
    over the remaining coordinates. Zero-weight coordinates whose direction
    component points outward are fixed in bulk (a monotone closure: dropping
    a coordinate with above-mean gradient lowers the mean, which can only
    mark more coordinates, so the batch reaches the same least fixed point as
    one-at-a-time processing). On each segment the objective is a 1-D
    quadratic minimised analytically.

    ``alpha`` (weights) and ``resid`` (``q - alpha @ data``) are updated in
    place; ``col_sums`` (column sums of ``data``) and ``grad_cols``
    (``grad @ data``) are read only. Returns the number of coordinates fixed
    during the walk.
    """
    n = alpha.shape[0]
    inactive = np.ones(n, dtype=bool)
    s_cols = np.array(col_sums, dtype=np.float64)
    g_cols = np.array(grad_cols, dtype=np.float64)
    g_sum = float(grad.sum())
    n_free = n
    bends = 0

    def prune():
        # Fix every zero weight with an outward direction component; repeat
        # because each dropped batch lowers the mean.
        nonlocal g_sum, n_free, bends
        while n_free > 1:
            mu = g_sum / n_free
            drop = inactive & (alpha <= 0.0) & (grad > mu)
            count = int(np.count_nonzero(drop))
            if count == 0:
                return
            alpha[drop] = 0.0
            inactive[drop] = False
            g_sum -= float(grad[drop].sum())
            g_cols[:] -= grad[drop] @ data[drop]
            s_cols[:] -= data[drop].sum(axis=0)
            n_free -= count
            bends += count

    prune()
    while True:
        mu = g_sum / n_free
        w = mu * s_cols - g_cols          # (p @ data) for p = mu - grad on free coords
        rw = float(resid @ w)             # -slope of the objective along p
        curv = float(w @ w)
        # w comes from a difference of like-sized terms, so below the
        # cancellation floor it is pure noise and the slope sign is
        # meaningless; stepping rw/curv there corrupts the walk.
        w_floor = float(np.linalg.norm(np.abs(mu) * np.abs(s_cols) + np.abs(g_cols)))
        if rw <= 64.0 * _EPS * w_floor * float(np.linalg.norm(resid)):
            break
        p = np.where(inactive, mu - grad, 0.0)
        shrinking = (p < 0.0) & (alpha > 0.0)
        if shrinking.any():
            ratios = np.full(n, np.inf)
            np.divide(alpha, -p, out=ratios, where=shrinking)
            j = int(np.argmin(ratios))
            t_bound = float(ratios[j])
        else:
            j, t_bound = -1, np.inf
        if curv > 0.0 and rw / curv <= t_bound:
            t_star = rw / curv
            alpha[inactive] += t_star * p[inactive]
            np.maximum(alpha, 0.0, out=alpha)
            resid -= t_star * w
            break
        if not np.isfinite(t_bound) or n_free <= 1:
            break
        alpha[inactive] += t_bound * p[inactive]
        np.maximum(alpha, 0.0, out=alpha)
        resid -= t_bound * w
        alpha[j] = 0.0
        inactive[j] = False
        g_sum -= float(grad[j])
        g_cols[:] -= grad[j] * data[j]
        s_cols[:] -= data[j]
        n_free -= 1
        bends += 1
        prune()
    # Round-off repair: pin the weight sum back to one on the largest weight.
    shift = 1.0 - float(alpha.sum())
    if shift != 0.0:
        j = int(np.argmax(alpha))
        alpha[j] += shift
        resid -= shift * data[j]
    return bends
