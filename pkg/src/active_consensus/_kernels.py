"""Compiled inner loops for stacks of small dense budgeted QPs.

These mirror ``qp.project_rows``, ``qp.duality_gap`` and ``qp._pgd`` one row
at a time. Local link selection solves one small problem per node at every
consensus iteration, and at that size interpreter overhead, not arithmetic,
dominates the vectorized versions.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def project_row(y, c, C, out):
    D = y.size
    spent = 0.0
    for i in range(D):
        v = min(max(y[i], 0.0), 1.0)
        out[i] = v
        spent += c[i] * v
    if spent <= C:
        return
    if C <= 0.0:
        for i in range(D):
            if c[i] > 0.0:
                out[i] = 0.0
        return
    K = 0
    for i in range(D):
        if c[i] > 0.0:
            K += 1
    knots = np.empty(2 * K)
    change = np.empty(2 * K)
    total = 0.0
    j = 0
    for i in range(D):
        if c[i] > 0.0:
            knots[j] = (y[i] - 1.0) / c[i]
            change[j] = -c[i] * c[i]
            knots[j + 1] = y[i] / c[i]
            change[j + 1] = c[i] * c[i]
            total += c[i]
            j += 2
    order = np.argsort(knots, kind="mergesort")
    level = total
    slope = 0.0
    prev = knots[order[0]]
    theta = prev
    for j in range(2 * K):
        k = knots[order[j]]
        nxt = level + slope * (k - prev)
        if nxt <= C:
            theta = prev + (level - C) / -slope
            break
        level = nxt
        prev = k
        slope += change[order[j]]
    for i in range(D):
        if c[i] > 0.0:
            out[i] = min(max(y[i] - theta * c[i], 0.0), 1.0)


@njit(cache=True)
def gap_row(b, G, c, C):
    D = b.size
    s = np.zeros(D)
    keys = np.full(D, np.inf)
    for i in range(D):
        if G[i] < 0.0:
            if c[i] <= 0.0:
                s[i] = 1.0
            else:
                keys[i] = G[i] / c[i]
    order = np.argsort(keys, kind="mergesort")
    before = 0.0
    for j in range(D):
        i = order[j]
        if keys[i] == np.inf:
            break
        s[i] = min(max((C - before) / c[i], 0.0), 1.0)
        before += c[i]
    gap = 0.0
    for i in range(D):
        gap += G[i] * (b[i] - s[i])
    return gap


@njit(cache=True)
def _matvec(A, x, out):
    D = x.size
    for i in range(D):
        acc = 0.0
        for j in range(D):
            acc += A[i, j] * x[j]
        out[i] = acc


@njit(cache=True)
def _value(x, Ax, g):
    f = 0.0
    for i in range(x.size):
        f += x[i] * (0.5 * Ax[i] + g[i])
    return f


@njit(cache=True)
def pgd_dense(A, g, c, C, lam, tol, max_iter, accelerate, gap_tol, gap_every):
    """Accelerated projected gradient from zero on each row; ``gap_tol < 0`` disables the gap rule."""
    N, D = g.shape
    P = np.zeros((N, D))
    F = np.zeros(N)
    iterations = np.zeros(N, dtype=np.int64)
    converged = np.zeros(N, dtype=np.bool_)
    gaps = np.full(N, np.nan)
    y = np.empty(D)
    Ay = np.empty(D)
    b = np.empty(D)
    Ab = np.empty(D)
    z = np.empty(D)
    Az = np.empty(D)
    trial = np.empty(D)
    grad = np.empty(D)
    for r in range(N):
        if C[r] <= 0.0:
            converged[r] = True
            continue
        Ar, gr, cr = A[r], g[r], c[r]
        for i in range(D):
            b[i] = 0.0
            Ab[i] = 0.0
            y[i] = 0.0
            Ay[i] = 0.0
        fb = 0.0
        step = 1.0 / lam[r] if lam[r] > 0.0 else 1.0
        t = 1.0
        momentum = False
        done = False
        it = 0
        for it in range(1, max_iter + 1):
            for i in range(D):
                trial[i] = y[i] - step * (Ay[i] + gr[i])
            project_row(trial, cr, C[r], z)
            _matvec(Ar, z, Az)
            fz = _value(z, Az, gr)
            if fz > fb + 1e-14 * (1.0 + abs(fb)):
                if momentum:
                    for i in range(D):
                        y[i] = b[i]
                        Ay[i] = Ab[i]
                    t = 1.0
                    momentum = False
                else:
                    step *= 0.5
                continue
            moved = 0.0
            for i in range(D):
                moved = max(moved, abs(z[i] - b[i]))
            small = moved <= tol
            finished = small and not momentum
            if gap_tol >= 0.0 and it % gap_every == 0:
                for i in range(D):
                    grad[i] = Az[i] + gr[i]
                gaps[r] = gap_row(z, grad, cr, C[r])
                finished = finished or gaps[r] <= gap_tol * abs(fz)
            if accelerate:
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                beta = 0.0 if small else (t - 1.0) / t_next
                for i in range(D):
                    y[i] = z[i] + beta * (z[i] - b[i])
                    Ay[i] = Az[i] + beta * (Az[i] - Ab[i])
                t = 1.0 if small else t_next
                momentum = beta > 0.0
            else:
                for i in range(D):
                    y[i] = z[i]
                    Ay[i] = Az[i]
            for i in range(D):
                b[i] = z[i]
                Ab[i] = Az[i]
            fb = fz
            if finished:
                done = True
                break
        for i in range(D):
            P[r, i] = b[i]
        F[r] = fb
        iterations[r] = it if done else max_iter
        converged[r] = done
    return P, F, iterations, converged, gaps
