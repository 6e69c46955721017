"""Shared builders and independent oracles for the test suite."""

import itertools

import numpy as np

from active_consensus.topology import Graph, is_connected


def random_connected_graph(rng, n, extra=0.3, costs=False):
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    order = rng.permutation(n)
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(i)])))) for i in range(1, n)}
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < extra:
                edges.add((a, b))
    edges = sorted(edges)
    c = rng.uniform(0.5, 2.0, len(edges)) if costs else None
    g = Graph.from_edges(n, edges, c)
    assert is_connected(g)
    return g


def complete_graph(n):
    return Graph.from_edges(n, [(a, b) for a in range(n) for b in range(a + 1, n)])


def random_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    B = rng.standard_normal((m, rank))
    return B @ B.T


def active_set_oracle(A, g, c, C):
    """Exact minimum of 0.5 b'Ab + g'b over {0 <= b <= 1, c'b <= C} by enumeration.

    Every choice of coordinates pinned at 0 or 1, with the budget either tight
    or slack, fixes an equality-constrained quadratic on the free coordinates.
    Its KKT system is solved by least squares (so singular ``A`` is handled),
    and the best feasible candidate is returned.
    """
    m = len(g)
    best_val, best_b = np.inf, None
    for status in itertools.product((0, 1, 2), repeat=m):  # 0: at lower, 1: at upper, 2: free
        fixed_b = np.array([1.0 if s == 1 else 0.0 for s in status])
        free = np.array([s == 2 for s in status])
        for tight in (False, True):
            b = fixed_b.copy()
            k = int(free.sum())
            if k:
                Aff = A[np.ix_(free, free)]
                rhs = -(g[free] + A[np.ix_(free, ~free)] @ fixed_b[~free])
                if tight:
                    cf = c[free]
                    K = np.block([[Aff, cf[:, None]], [cf[None, :], np.zeros((1, 1))]])
                    r = np.concatenate([rhs, [C - c[~free] @ fixed_b[~free]]])
                    sol = np.linalg.lstsq(K, r, rcond=None)[0]
                    if np.linalg.norm(K @ sol - r) > 1e-8 * (1 + np.linalg.norm(r)):
                        continue
                    b[free] = sol[:k]
                else:
                    sol = np.linalg.lstsq(Aff, rhs, rcond=None)[0]
                    if np.linalg.norm(Aff @ sol - rhs) > 1e-8 * (1 + np.linalg.norm(rhs)):
                        continue
                    b[free] = sol
            elif tight:
                continue
            if np.all(b >= -1e-9) and np.all(b <= 1 + 1e-9) and c @ b <= C + 1e-9:
                val = 0.5 * b @ A @ b + g @ b
                if val < best_val:
                    best_val, best_b = val, b
    return best_val, best_b
