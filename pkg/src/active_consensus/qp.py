"""Box- and budget-constrained convex QP, and randomized rounding of its solution.

The relaxed link-selection problem is

    minimize    0.5 * b^T A b + g^T b
    subject to  0 <= b <= 1,  c^T b <= C

with ``A`` symmetric positive semidefinite and ``c >= 0``. The solver works on
a stack of such problems at once (rows of a 2-D array); a single problem is a
stack of one. Padding coordinates with zero cost, zero gradient and zero
Hessian rows stay at 0 and do not affect the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator

from . import _kernels

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 5000
POWER_ITERATIONS = 50
GAP_EVERY = 5


@dataclass(frozen=True)
class BudgetedQp:
    """Problem data. ``A`` is a dense array or, for large structured problems,
    a ``LinearOperator`` that is trusted to be symmetric PSD."""

    A: np.ndarray | LinearOperator
    g: np.ndarray
    c: np.ndarray
    C: float

    def __post_init__(self):
        A = self.A
        if not isinstance(A, LinearOperator):
            A = np.atleast_2d(np.asarray(A, dtype=float))
            if A.shape[0] == A.shape[1] and np.max(np.abs(A - A.T), initial=0.0) > 1e-9:
                raise ValueError("A must be symmetric")
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        m = g.shape[0]
        if A.shape != (m, m) or c.shape != (m,):
            raise ValueError(f"inconsistent shapes: A {A.shape}, g {g.shape}, c {c.shape}")
        if np.any(c < 0):
            raise ValueError("costs must be nonnegative")
        if self.C < 0:
            raise ValueError("budget must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "C", float(self.C))

    @property
    def m(self) -> int:
        return self.g.shape[0]

    def objective(self, b) -> float:
        b = np.asarray(b, dtype=float)
        return float(0.5 * b @ (self.A @ b) + self.g @ b)

    def is_feasible(self, b, tol=1e-6) -> bool:
        b = np.asarray(b, dtype=float)
        return bool(np.all(b >= -tol) and np.all(b <= 1 + tol) and self.c @ b <= self.C + tol)


@dataclass(frozen=True)
class QpResult:
    p: np.ndarray
    objective: float
    iterations: int
    converged: bool
    gap: float = math.nan  # duality-gap bound on objective - optimum, when computed


@dataclass(frozen=True)
class BatchResult:
    p: np.ndarray           # (N, D)
    objective: np.ndarray   # (N,)
    iterations: np.ndarray  # (N,)
    converged: np.ndarray   # (N,) bool
    gap: np.ndarray         # (N,) last duality gap, nan when not tracked


def project_rows(Y, c, C) -> np.ndarray:
    """Row-wise Euclidean projection onto ``{0 <= b <= 1, c^T b <= C}``.

    Where clamping to the box already meets the budget that is the answer.
    Otherwise the projection is ``clip(y - theta*c, 0, 1)`` for the unique
    ``theta > 0`` putting the budget at equality. ``c^T clip(y - theta*c)`` is
    piecewise linear in ``theta``, so the root is located exactly by walking
    its sorted breakpoints. Zero-cost coordinates are only clamped.
    """
    Y = np.asarray(Y, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), Y.shape)
    C = np.broadcast_to(np.asarray(C, dtype=float), Y.shape[:1])
    Z = np.clip(Y, 0.0, 1.0)
    over = np.einsum("ij,ij->i", c, Z) > C
    if not over.any():
        return Z
    rows = np.flatnonzero(over)
    y, cr, budget = Y[rows], c[rows], C[rows]
    pos = cr > 0
    safe = np.where(pos, cr, 1.0)
    # below (y-1)/c a coordinate sits at 1, above y/c it sits at 0
    knots = np.concatenate((np.where(pos, (y - 1.0) / safe, np.inf),
                            np.where(pos, y / safe, np.inf)), axis=1)
    c2 = cr * cr
    slope_change = np.concatenate((-c2, c2), axis=1)
    order = np.argsort(knots, axis=1, kind="stable")
    knots = np.take_along_axis(knots, order, axis=1)
    slopes = np.cumsum(np.take_along_axis(slope_change, order, axis=1), axis=1)
    with np.errstate(invalid="ignore"):
        gaps = np.diff(knots, axis=1)
    gaps[~np.isfinite(gaps)] = 0.0
    spent = cr.sum(axis=1, keepdims=True) + np.concatenate(
        (np.zeros((len(rows), 1)), np.cumsum(slopes[:, :-1] * gaps, axis=1)), axis=1)
    k = np.argmax(spent <= budget[:, None], axis=1)
    r = np.arange(len(rows))
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = knots[r, k - 1] + (spent[r, k - 1] - budget) / -slopes[r, k - 1]
        theta = np.where(budget > 0, theta, np.inf)
        shifted = np.where(pos, y - theta[:, None] * cr, y)
    Z[rows] = np.clip(shifted, 0.0, 1.0)
    return Z


def project(y, c, C) -> np.ndarray:
    """Euclidean projection of one vector onto ``{0 <= b <= 1, c^T b <= C}``."""
    y = np.asarray(y, dtype=float)
    return project_rows(y[None, :], np.asarray(c, dtype=float)[None, :], [C])[0]


def _rowdot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _largest_eigenvalues(matvec, N, D) -> np.ndarray:
    # fixed start vector keeps the solver deterministic
    start = np.random.default_rng(12345).uniform(0.5, 1.5, D)
    V = np.tile(start / np.linalg.norm(start), (N, 1))
    rows = np.arange(N)
    lam = np.zeros(N)
    norm = np.zeros(N)
    for _ in range(POWER_ITERATIONS):
        W = matvec(V, rows)
        norm = np.linalg.norm(W, axis=1)
        lam = _rowdot(V, W)
        nz = norm > 0
        V = np.where(nz[:, None], W / np.where(nz, norm, 1.0)[:, None], V)
    return np.maximum(lam, norm)


def linear_minimizer(G, c, C) -> np.ndarray:
    """Row-wise vertex ``s`` minimizing ``G . s`` over ``{0 <= s <= 1, c^T s <= C}``.

    A fractional knapsack: free coordinates with negative weight are set to
    one, then paid ones are filled in order of weight per unit cost until the
    budget runs out.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    c = np.broadcast_to(np.asarray(c, dtype=float), G.shape)
    C = np.broadcast_to(np.asarray(C, dtype=float), G.shape[:1])
    neg = G < 0
    S = (neg & (c <= 0)).astype(float)
    paid = neg & (c > 0)
    key = np.where(paid, G / np.where(paid, c, 1.0), np.inf)
    order = np.argsort(key, axis=1, kind="stable")
    cost = np.take_along_axis(np.where(paid, c, 0.0), order, axis=1)
    before = np.cumsum(cost, axis=1) - cost
    with np.errstate(divide="ignore", invalid="ignore"):
        fill = np.clip((C[:, None] - before) / cost, 0.0, 1.0)
    fill = np.where(cost > 0, fill, 0.0)
    np.put_along_axis(S, order, np.where(cost > 0, fill, np.take_along_axis(S, order, axis=1)), axis=1)
    return S


def duality_gap(b, grad, c, C) -> np.ndarray:
    """Frank-Wolfe gap ``grad . (b - s)``, an upper bound on ``f(b) - min f`` for convex ``f``."""
    b = np.atleast_2d(b)
    grad = np.atleast_2d(grad)
    return _rowdot(grad, b - linear_minimizer(grad, c, C))


def _pgd(matvec, g, c, C, tol, max_iter, accelerate, b0, gap_tol=None, lam=None) -> BatchResult:
    """Projected gradient over a stack of problems sharing nothing but the iteration count.

    Each row keeps its own step, momentum and stopping state. ``matvec(X, rows)``
    must return the Hessian products of the problems ``rows`` with ``X``.
    ``lam`` holds the largest Hessian eigenvalues when known; otherwise they
    are estimated by power iteration. With ``gap_tol`` a row also stops once
    its duality gap (checked every ``GAP_EVERY`` iterations) is at most
    ``gap_tol * |f(b)|``.
    """
    N, D = g.shape
    b = project_rows(b0, c, C)
    Ab = matvec(b, np.arange(N))
    fb = _rowdot(b, 0.5 * Ab + g)
    if lam is None:
        lam = _largest_eigenvalues(matvec, N, D)
    step = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 1.0)
    y, Ay = b.copy(), Ab.copy()
    t = np.ones(N)
    momentum = np.zeros(N, dtype=bool)
    done = C <= 0
    b[done] = 0.0
    fb[done] = 0.0
    iterations = np.zeros(N, dtype=int)
    gap = np.full(N, np.nan)

    for it in range(1, max_iter + 1):
        rows = np.flatnonzero(~done)
        if rows.size == 0:
            break
        z = project_rows(y[rows] - step[rows, None] * (Ay[rows] + g[rows]), c[rows], C[rows])
        Az = matvec(z, rows)
        fz = _rowdot(z, 0.5 * Az + g[rows])
        worse = fz > fb[rows] + 1e-14 * (1.0 + np.abs(fb[rows]))

        had_momentum = momentum[rows]
        restart = rows[worse & had_momentum]
        y[restart], Ay[restart], t[restart] = b[restart], Ab[restart], 1.0
        momentum[restart] = False
        step[rows[worse & ~had_momentum]] *= 0.5

        ok = ~worse
        acc, z, Az, fz = rows[ok], z[ok], Az[ok], fz[ok]
        moved = np.max(np.abs(z - b[acc]), axis=1) if D else np.zeros(len(acc))
        small = moved <= tol
        finished = small & ~momentum[acc]
        if gap_tol is not None and it % GAP_EVERY == 0:
            gap[acc] = duality_gap(z, Az + g[acc], c[acc], C[acc])
            finished |= gap[acc] <= gap_tol * np.abs(fz)
        if accelerate:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t[acc] ** 2))
            beta = (t[acc] - 1.0) / t_next
            beta[small] = 0.0  # confirm stationarity with a plain step before stopping
            y[acc] = z + beta[:, None] * (z - b[acc])
            Ay[acc] = Az + beta[:, None] * (Az - Ab[acc])
            t[acc] = np.where(small, 1.0, t_next)
            momentum[acc] = beta > 0
        else:
            y[acc], Ay[acc] = z, Az
        b[acc], Ab[acc], fb[acc] = z, Az, fz
        done[acc[finished]] = True
        iterations[acc[finished]] = it

    iterations[~done] = max_iter
    return BatchResult(b, fb, iterations, done.copy(), gap)


def solve(qp: BudgetedQp, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          x0=None, accelerate: bool = True, gap_tol: float | None = None) -> QpResult:
    """Projected gradient descent from ``x0`` (default: all zeros).

    The step starts at ``1 / lambda_max`` from a power-iteration estimate and
    is halved whenever a plain step fails to decrease the objective, so every
    accepted iterate improves on the last. With ``accelerate`` the gradient is
    taken at a Nesterov extrapolation point; the momentum is dropped whenever
    it would increase the objective. Stops once a plain projected-gradient
    step moves no coordinate by more than ``tol``; on ``max_iter`` exhaustion
    the best iterate is returned with ``converged=False``. A zero budget returns
    ``p = 0`` at once.

    ``gap_tol`` adds a second, certified stopping rule: the Frank-Wolfe gap
    bounds the distance to the optimal value, so the run may end once it is
    below ``gap_tol * |f(b)|``. This matters when ``A`` is singular, where
    the minimizers form a face and the iterates can creep along it for long
    after the objective has settled.
    """
    m = qp.m
    if qp.C == 0.0 or m == 0:
        p = np.zeros(m)
        return QpResult(p, qp.objective(p), 0, True, 0.0)
    A = qp.A

    def matvec(X, rows):
        return np.atleast_2d(A @ X[0])

    b0 = np.zeros((1, m)) if x0 is None else np.asarray(x0, dtype=float).reshape(1, m)
    res = _pgd(matvec, qp.g[None, :], qp.c[None, :], np.array([qp.C]), tol, max_iter,
               accelerate, b0, gap_tol)
    return QpResult(res.p[0], float(res.objective[0]), int(res.iterations[0]), bool(res.converged[0]),
                    float(res.gap[0]))


def solve_batch(A, g, c, C, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                accelerate: bool = True, gap_tol: float | None = None) -> BatchResult:
    """Solve ``N`` independent dense problems stacked as ``A (N,D,D)``, ``g, c (N,D)``, ``C (N,)``.

    Row ``i`` runs the same iteration ``solve`` would run on problem ``i``,
    except that the step comes from exact eigenvalues of the small dense
    Hessians rather than a power-iteration estimate. The loop itself is
    compiled (see ``_kernels``).
    """
    A = np.ascontiguousarray(A, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    lam = np.linalg.eigvalsh(A)[:, -1] if A.shape[1] else np.zeros(len(A))
    P, F, iterations, converged, gap = _kernels.pgd_dense(
        A, g, c, C, lam, float(tol), int(max_iter), bool(accelerate),
        -1.0 if gap_tol is None else float(gap_tol), GAP_EVERY)
    return BatchResult(P, F, iterations, converged, gap)


def sample(p, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli draws with ``P(b[e] = 1) = p[e]``."""
    p = np.asarray(p, dtype=float)
    return (rng.random(p.shape[0]) < p).astype(np.int8)
