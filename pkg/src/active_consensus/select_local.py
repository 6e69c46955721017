"""Decentralized link selection.

Every node solves a small relaxed QP over its own incident links, predicting
each neighbour's next value from the neighbours the two nodes share. The two
endpoint probabilities of each link are averaged and the link is then sampled.

By default the prediction of neighbour ``u`` also accounts for the link
``{v, u}`` itself, the one link of ``u`` that ``v`` controls. Without that term
the shared-neighbour corrections cancel when summed over the neighbours, and
the local objective depends on ``b`` only through the scalar ``sum_u b_u (x_v - x_u)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import sparse

from . import qp as qp_solver
from .select_global import Selection
from .topology import Graph, TopologyError, incident_edges, neighbors

PREDICTION_SIGNS = ("consistent", "paper")
MIN_BATCH_WIDTH = 8


@dataclass(frozen=True)
class LocalProblem:
    node: int
    edges: tuple[int, ...]
    qp: qp_solver.BudgetedQp


def _sign(prediction_sign):
    if prediction_sign not in PREDICTION_SIGNS:
        raise ValueError(f"prediction_sign must be one of {PREDICTION_SIGNS}")
    # "paper" keeps the literal printed form x_u - delta * sum(x_w - x_u)
    return 1.0 if prediction_sign == "consistent" else -1.0


def shared_neighbor_prediction(g: Graph, x, v: int, u: int, delta: float,
                               prediction_sign: str = "consistent") -> float:
    """Node ``v``'s estimate of neighbour ``u``'s next state.

    Only the neighbours common to ``u`` and ``v`` enter the estimate, so ``v``
    never needs values beyond its own neighbourhood.
    """
    if u not in neighbors(g, v):
        raise TopologyError(f"nodes {v} and {u} are not adjacent")
    x = np.asarray(x, dtype=float)
    shared = sorted(neighbors(g, u) & neighbors(g, v))
    pull = sum(x[u] - x[w] for w in shared)
    return float(x[u] - _sign(prediction_sign) * delta * pull)


class LocalLinkSelector:
    """Per-node link selection on a fixed graph.

    The shared-neighbour structure is precomputed once; for each directed pair
    ``(v, u)`` along an edge it stores the indicator row of ``N_u & N_v``.
    """

    def __init__(self, g: Graph, prediction_sign: str = "consistent", include_own_link: bool = True):
        self.graph = g
        self.sign = _sign(prediction_sign)
        self.include_own_link = include_own_link
        self._incident = [np.array(incident_edges(g, v), dtype=int) for v in range(g.n)]
        self._other = []
        rows, cols = [], []
        self._pair_index = []
        k = 0
        for v in range(g.n):
            others = np.array([a + b - v for a, b in (g.edges[e] for e in self._incident[v])], dtype=int)
            self._other.append(others)
            idx = np.arange(k, k + len(others))
            self._pair_index.append(idx)
            for j, u in zip(idx, others):
                for w in neighbors(g, int(u)) & neighbors(g, v):
                    rows.append(j)
                    cols.append(w)
            k += len(others)
        self._n_pairs = k
        self._shared = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k, g.n))
        self._shared_count = np.asarray(self._shared.sum(axis=1)).ravel()
        self._pair_u = np.concatenate(self._other) if k else np.zeros(0, dtype=int)
        self._buckets = {}
        for v in range(g.n):
            d = len(self._incident[v])
            if d:
                self._buckets.setdefault(max(MIN_BATCH_WIDTH, 1 << (d - 1).bit_length()), []).append(v)
        self._layouts = {w: self._layout(nodes, w) for w, nodes in self._buckets.items()}

    def _layout(self, nodes, width):
        """Padded index arrays (node, neighbour, directed pair, edge) for a group of nodes."""
        N = len(nodes)
        other = np.zeros((N, width), dtype=int)
        pair = np.zeros((N, width), dtype=int)
        edges = np.zeros((N, width), dtype=int)
        mask = np.zeros((N, width), dtype=bool)
        for i, v in enumerate(nodes):
            k = len(self._incident[v])
            other[i, :k] = self._other[v]
            pair[i, :k] = self._pair_index[v]
            edges[i, :k] = self._incident[v]
            mask[i, :k] = True
        costs = np.where(mask, self.graph.costs[edges], 0.0)
        return np.asarray(nodes, dtype=int), other, pair, edges, mask, costs

    def predictions(self, x, delta: float) -> np.ndarray:
        """Predicted next value of ``u`` as seen from ``v``, for all directed pairs (node-major)."""
        x = np.asarray(x, dtype=float)
        xu = x[self._pair_u]
        pull = self._shared_count * xu - self._shared @ x
        return xu - self.sign * delta * pull

    def _quadratics(self, x, delta, pred, layout):
        # residual toward neighbour u is a_u - delta * (M b)_u, for every node of the group
        nodes, other, pair, _, mask, _ = layout
        x = np.asarray(x, dtype=float)
        xv = x[nodes][:, None]
        s = np.where(mask, xv - x[other], 0.0)
        a = np.where(mask, xv - pred[pair], 0.0)
        M = mask[:, :, None] * s[:, None, :]
        if self.include_own_link:
            diag = np.arange(s.shape[1])
            M[:, diag, diag] += s
        A = delta * delta * np.einsum("nij,nik->njk", M, M)
        A = 0.5 * (A + A.transpose(0, 2, 1))
        return A, -delta * np.einsum("nij,ni->nj", M, a)

    def local_problem(self, x, v: int, delta: float, alpha: float, pred=None) -> LocalProblem:
        """Relaxed QP over the links of ``v``, minimizing half the squared gaps
        between ``v``'s next value and the predicted next values of its neighbours.

        With ``s_u = x_v - x_u`` the next value of ``v`` is ``x_v - delta * s.b``
        and the prediction for ``u`` gains ``delta * b_u * s_u`` from the shared
        link (when ``include_own_link``), so every residual is affine in ``b``.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        self.graph._check_node(v)
        pred = self.predictions(x, delta) if pred is None else pred
        edges = self._incident[v]
        A, grad = self._quadratics(x, delta, pred, self._layout([v], len(edges)))
        costs = self.graph.costs[edges]
        problem = qp_solver.BudgetedQp(A[0], grad[0], costs, alpha * float(costs.sum()))
        return LocalProblem(v, tuple(int(e) for e in edges), problem)

    def select(self, x, delta: float, alpha: float, rng: np.random.Generator, **solver_kw) -> Selection:
        """Solve every node's problem, average the two endpoint probabilities and sample.

        Nodes are grouped by degree rounded up to a power of two (at least
        ``MIN_BATCH_WIDTH``), and each group is solved as one padded batch.
        Padding slots carry zero cost, gradient and curvature, so they stay at 0.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        pred = self.predictions(x, delta)
        probs = np.zeros(self.graph.m)
        converged = True
        for layout in self._layouts.values():
            _, _, _, edges, mask, costs = layout
            A, grad = self._quadratics(x, delta, pred, layout)
            result = qp_solver.solve_batch(A, grad, costs, alpha * costs.sum(axis=1), **solver_kw)
            converged &= bool(result.converged.all())
            np.add.at(probs, edges[mask], 0.5 * result.p[mask])
        probs = np.clip(probs, 0.0, 1.0)
        return Selection(qp_solver.sample(probs, rng), probs, converged)


def build_local_qp(g: Graph, x, v: int, delta: float, alpha: float,
                   prediction_sign: str = "consistent", include_own_link: bool = True) -> LocalProblem:
    return LocalLinkSelector(g, prediction_sign, include_own_link).local_problem(x, v, delta, alpha)


def merge_probabilities(g: Graph, per_node: Mapping[int, Mapping[int, float]]) -> np.ndarray:
    """Average the two endpoint probabilities of every edge."""
    probs = np.empty(g.m)
    for e, (u, v) in enumerate(g.edges):
        try:
            pu, pv = per_node[u][e], per_node[v][e]
        except KeyError:
            raise ValueError(f"edge {e} = ({u}, {v}) lacks a probability from one endpoint") from None
        probs[e] = 0.5 * (pu + pv)
    return np.clip(probs, 0.0, 1.0)


def select_links_local(g: Graph, x, delta: float, alpha: float, rng: np.random.Generator,
                       prediction_sign: str = "consistent", include_own_link: bool = True,
                       **solver_kw) -> Selection:
    return LocalLinkSelector(g, prediction_sign, include_own_link).select(x, delta, alpha, rng, **solver_kw)
