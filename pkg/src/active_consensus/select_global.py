"""Centralized link selection: one relaxed QP over all edges, then randomized rounding."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from . import qp as qp_solver
from .topology import Graph, build_laplacian


class Selection(NamedTuple):
    mask: np.ndarray
    probs: np.ndarray
    converged: bool


def build_difference_matrix(g: Graph, x) -> np.ndarray:
    """Node-by-edge matrix ``U`` with ``masked_update(x, g, b, delta) == x - delta * U @ b``.

    The column of edge ``{u, v}`` holds ``x_u - x_v`` in row ``u`` and
    ``x_v - x_u`` in row ``v``.
    """
    x = np.asarray(x, dtype=float)
    u, v = g.endpoints()
    idx = np.arange(g.m)
    U = np.zeros((g.n, g.m))
    U[u, idx] = x[u] - x[v]
    U[v, idx] = x[v] - x[u]
    return U


def objective_value(g: Graph, x, delta: float, b, L=None) -> float:
    """Disagreement after one update with (possibly fractional) link weights ``b``."""
    L = build_laplacian(g) if L is None else L
    x = np.asarray(x, dtype=float)
    x_next = x - delta * (build_difference_matrix(g, x) @ np.asarray(b, dtype=float))
    return float(x_next @ L @ x_next)


class GlobalLinkSelector:
    """Link selection on a fixed graph.

    Writing ``U = D^T diag(w)`` with the signed incidence matrix ``D`` and the
    edge gaps ``w_e = x_u - x_v`` gives ``U^T L U = diag(w) K diag(w)`` where
    ``K = D L D^T`` depends on the graph only. ``K`` is computed once here.
    """

    def __init__(self, g: Graph, L=None):
        self.graph = g
        self.L = build_laplacian(g) if L is None else np.asarray(L, dtype=float)
        u, v = g.endpoints()
        self._u, self._v = u, v
        rows = np.repeat(np.arange(g.m), 2)
        cols = np.column_stack((u, v)).ravel()
        vals = np.tile([1.0, -1.0], g.m)
        self._D = sparse.csr_matrix((vals, (rows, cols)), shape=(g.m, g.n))
        self._DT = self._D.T.tocsr()
        self._DL = np.asarray(self._D @ self.L)
        self._coupling = None

    @property
    def coupling(self) -> np.ndarray:
        """Dense ``D L D^T`` (edges by edges), built on first use."""
        if self._coupling is None:
            self._coupling = self._DL[:, self._u] - self._DL[:, self._v]
        return self._coupling

    def build_qp(self, x, delta: float, alpha: float, dense: bool = True) -> qp_solver.BudgetedQp:
        """Relaxed problem whose objective is half the post-update disagreement, minus a constant.

        With ``dense=False`` the Hessian is a ``LinearOperator`` applying
        ``delta^2 diag(w) D L D^T diag(w)`` through the sparse incidence matrix.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        x = np.asarray(x, dtype=float)
        w = x[self._u] - x[self._v]
        scale = delta * delta
        if dense:
            A = scale * (w[:, None] * self.coupling * w[None, :])
            A = 0.5 * (A + A.T)
        else:
            D, DT, L = self._D, self._DT, self.L

            def hess(b):
                b = np.ravel(b)
                return scale * w * (D @ (L @ (DT @ (w * b))))

            A = LinearOperator((self.graph.m, self.graph.m), matvec=hess, rmatvec=hess, dtype=float)
        grad = -delta * w * (self._DL @ x)
        costs = self.graph.costs
        return qp_solver.BudgetedQp(A, grad, costs, alpha * float(costs.sum()))

    def select(self, x, delta: float, alpha: float, rng: np.random.Generator, **solver_kw) -> Selection:
        problem = self.build_qp(x, delta, alpha, dense=False)
        result = qp_solver.solve(problem, **solver_kw)
        mask = qp_solver.sample(result.p, rng)
        return Selection(mask, result.p, result.converged)


def build_global_qp(g: Graph, x, delta: float, alpha: float) -> qp_solver.BudgetedQp:
    return GlobalLinkSelector(g).build_qp(x, delta, alpha)


def select_links_global(g: Graph, x, delta: float, alpha: float, rng: np.random.Generator,
                        **solver_kw) -> Selection:
    return GlobalLinkSelector(g).select(x, delta, alpha, rng, **solver_kw)
