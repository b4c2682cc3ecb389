"""Compiled inner loops for the smoothing gradient solver.

These mirror ``lagrangian.smoothed_evaluate`` and ``minimax.wolfe_line_search``
step for step; the pure-numpy versions stay the reference and the test suite
checks agreement between the two.
"""
import math

import numpy as np
from numba import njit

# per-iteration record columns
MU, VALUE, GNORM, STEP, NEXT_VALUE, NEXT_GNORM, VERIFIED, PROJECTED, ACCEPTED = range(9)
N_COLUMNS = 9


@njit(cache=True)
def evaluate(x, ei, ej, lower, coeffs, mu, grad):
    """Smoothed value at ``x``; writes the gradient into ``grad``.

    ``coeffs`` holds ``c_0..c_r``; edges contribute ratios ``k = 1..m`` and ``m+1..2m``.
    """
    n = x.shape[0] // 2
    m = ei.shape[0]
    rho = np.empty(2 * m + 1)
    dx = np.empty(m)
    dy = np.empty(m)
    f0 = 0.0
    for p in range(2 * n):
        f0 += x[p] * x[p]
    rho[0] = f0 / coeffs[0]
    top = rho[0]
    for k in range(m):
        a = 2 * ei[k]
        b = 2 * ej[k]
        dx[k] = x[a] - x[b]
        dy[k] = x[a + 1] - x[b + 1]
        sq = dx[k] * dx[k] + dy[k] * dy[k]
        rho[k + 1] = sq / coeffs[k + 1]
        rho[m + k + 1] = (2.0 * lower[k] - sq) / coeffs[m + k + 1]
        if rho[k + 1] > top:
            top = rho[k + 1]
        if rho[m + k + 1] > top:
            top = rho[m + k + 1]
    s = 0.0
    for k in range(2 * m + 1):
        rho[k] = math.exp((rho[k] - top) / mu)
        s += rho[k]
    value = top + mu * math.log(s)
    scale = 2.0 * rho[0] / s / coeffs[0]
    for p in range(2 * n):
        grad[p] = scale * x[p]
    for k in range(m):
        w = 2.0 * (rho[k + 1] / coeffs[k + 1] - rho[m + k + 1] / coeffs[m + k + 1]) / s
        a = 2 * ei[k]
        b = 2 * ej[k]
        grad[a] += w * dx[k]
        grad[a + 1] += w * dy[k]
        grad[b] -= w * dx[k]
        grad[b + 1] -= w * dy[k]
    return value


@njit(cache=True)
def _dot(u, v):
    s = 0.0
    for p in range(u.shape[0]):
        s += u[p] * v[p]
    return s


@njit(cache=True)
def line_search(x, d, value0, slope, ei, ej, lower, coeffs, mu, sigma1, sigma2, max_iters, x_out, grad_out):
    """Bisection/doubling Wolfe search; returns ``(step, value, verified)``.

    ``x_out``/``grad_out`` receive the point and gradient at the returned step.
    """
    size = x.shape[0]
    trial_x = np.empty(size)
    trial_g = np.empty(size)
    lo = 0.0
    hi = np.inf
    t = 1.0
    best_t = -1.0
    best_v = np.inf
    for _ in range(max_iters):
        for p in range(size):
            trial_x[p] = x[p] + t * d[p]
        v = evaluate(trial_x, ei, ej, lower, coeffs, mu, trial_g)
        if best_t < 0.0 or v < best_v:
            best_t = t
            best_v = v
            x_out[:] = trial_x
            grad_out[:] = trial_g
        if v > value0 + sigma1 * t * slope:
            hi = t
            t = 0.5 * (lo + hi)
        elif _dot(trial_g, d) < sigma2 * slope:
            lo = t
            if hi == np.inf:
                t = 2.0 * lo
            else:
                t = 0.5 * (lo + hi)
        else:
            x_out[:] = trial_x
            grad_out[:] = trial_g
            return t, v, True
    return best_t, best_v, False


@njit(cache=True)
def solve(x0, ei, ej, lower, coeffs, box_lo, box_hi, mu, epsilon, gamma, gamma1, sigma1, sigma2,
          max_outer, max_ls, record, record_points):
    """Smoothing gradient loop.

    Returns ``(x, mu, iterations, last_tested_norm, value, records, xs, ds)``;
    ``records`` has one row per iteration when ``record`` is set, ``xs``/``ds``
    hold iterates and directions when ``record_points`` is set.
    """
    size = x0.shape[0]
    x = np.empty(size)
    for p in range(size):
        x[p] = min(max(x0[p], box_lo), box_hi)
    g = np.empty(size)
    value = evaluate(x, ei, ej, lower, coeffs, mu, g)
    new_x = np.empty(size)
    new_g = np.empty(size)
    d = np.empty(size)
    rows = max_outer if record else 0
    prow = max_outer if record_points else 0
    records = np.zeros((rows, N_COLUMNS))
    xs = np.zeros((prow, size))
    ds = np.zeros((prow, size))
    tested = math.sqrt(_dot(g, g))
    last_tested = tested
    it = 0
    while mu >= epsilon and it < max_outer:
        gnorm = math.sqrt(_dot(g, g))
        shrink = False
        step = 0.0
        verified = True
        projected = False
        accepted = False
        for p in range(size):
            d[p] = -g[p]
        if gnorm == 0.0:
            new_x[:] = x
            new_g[:] = g
            new_value = value
        else:
            slope = -gnorm * gnorm
            step, new_value, verified = line_search(
                x, d, value, slope, ei, ej, lower, coeffs, mu, sigma1, sigma2, max_ls, new_x, new_g
            )
            for p in range(size):
                target = x[p] + step * d[p]
                if target < box_lo:
                    target = box_lo
                    projected = True
                elif target > box_hi:
                    target = box_hi
                    projected = True
                new_x[p] = target
            if projected:
                new_value = evaluate(new_x, ei, ej, lower, coeffs, mu, new_g)
            accepted = True
            if not verified and not new_value < value:
                new_x[:] = x
                new_g[:] = g
                new_value = value
                accepted = False
                shrink = True
        tested = math.sqrt(_dot(new_g, new_g))
        if record:
            records[it, MU] = mu
            records[it, VALUE] = value
            records[it, GNORM] = gnorm
            records[it, STEP] = step
            records[it, NEXT_VALUE] = new_value
            records[it, NEXT_GNORM] = tested
            records[it, VERIFIED] = 1.0 if verified else 0.0
            records[it, PROJECTED] = 1.0 if projected else 0.0
            records[it, ACCEPTED] = 1.0 if accepted else 0.0
        if record_points:
            xs[it, :] = x
            ds[it, :] = d
        x[:] = new_x
        if shrink or tested < gamma * mu:
            last_tested = tested
            mu *= gamma1
            value = evaluate(x, ei, ej, lower, coeffs, mu, g)
        else:
            g[:] = new_g
            value = new_value
        it += 1
    if mu >= epsilon:
        last_tested = math.sqrt(_dot(g, g))
    return x, mu, it, last_tested, value, records[:it], xs[:it], ds[:it]
