"""Consensus state updates, the disagreement metric and the stopping rule.

States are plain 1-D float arrays. Every update returns a fresh array, so all
nodes read values from the previous step.
"""

from __future__ import annotations

import numpy as np

from .topology import Graph

DEFAULT_TOLERANCE = 1e-3


def init_states(n: int, seed=0) -> np.ndarray:
    """I.i.d. standard normal initial states."""
    if n < 1:
        raise ValueError("need at least one node")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.standard_normal(n)


def _check_dims(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"state vector has shape {x.shape}, expected ({n},)")
    return x


def full_update(x, L, delta: float) -> np.ndarray:
    """One synchronous step ``(I - delta*L) x`` using every link."""
    L = np.asarray(L, dtype=float)
    x = _check_dims(x, L.shape[0])
    return x - delta * (L @ x)


def masked_update(x, g: Graph, b, delta: float) -> np.ndarray:
    """One synchronous step using only the links with ``b[e] == 1``.

    Each active edge moves both endpoints toward each other, so the mean of
    ``x`` is preserved for every mask. Fractional ``b`` is accepted and acts
    as a per-edge weight.
    """
    x = _check_dims(x, g.n)
    b = np.asarray(b, dtype=float)
    if b.shape != (g.m,):
        raise ValueError(f"link mask has shape {b.shape}, expected ({g.m},)")
    u, v = g.endpoints()
    flow = b * (x[u] - x[v])
    step = np.zeros(g.n)
    np.add.at(step, u, flow)
    np.add.at(step, v, -flow)
    return x - delta * step


def disagreement(x, L) -> float:
    """Sum of squared differences across edges, ``x^T L x``."""
    L = np.asarray(L, dtype=float)
    x = _check_dims(x, L.shape[0])
    return float(x @ L @ x)


def spread(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.max() - x.min())


def has_converged(x, eps: float = DEFAULT_TOLERANCE) -> bool:
    return spread(x) < eps


def decompose(x) -> tuple[float, np.ndarray]:
    """Split ``x`` into its mean and the zero-mean difference component."""
    x = np.asarray(x, dtype=float)
    mu = float(x.mean())
    return mu, x - mu
