"""Symmetric eigendecomposition, optimal consensus step size and contraction norm."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SYMMETRY_TOL = 1e-9
JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


class SpectralError(ValueError):
    pass


class DisconnectedGraphError(SpectralError):
    """The algebraic connectivity is zero, so no step size reaches consensus."""


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray   # ascending
    vectors: np.ndarray  # column i pairs with values[i]

    @property
    def algebraic_connectivity(self) -> float:
        return float(self.values[1]) if len(self.values) > 1 else 0.0

    @property
    def largest(self) -> float:
        return float(self.values[-1])


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Pairings for the circle-method tournament on ``n`` (even) players.

    Every unordered pair appears in exactly one of the ``n - 1`` rounds, and
    pairs within a round are disjoint.
    """
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(A):
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def sym_eigen(L, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS) -> Spectrum:
    """Eigen-decompose a real symmetric matrix with cyclic Jacobi rotations.

    Rotations are applied a round at a time: each round annihilates ``n/2``
    disjoint off-diagonal pairs at once, and ``n - 1`` rounds cover every pair
    (one sweep). Iteration stops when the off-diagonal Frobenius norm falls
    below ``tol * max(1, ||L||_F)`` or after ``max_sweeps`` sweeps.
    """
    A = np.array(L, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise SpectralError("matrix has non-finite entries")
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL:
        raise SpectralError("matrix is not symmetric")
    n = A.shape[0]
    A = (A + A.T) / 2
    size = n + (n % 2)
    if size != n:
        A = np.pad(A, ((0, 1), (0, 1)))
    V = np.eye(size)
    threshold = tol * max(1.0, float(np.linalg.norm(A)))

    if n > 1:
        rounds = _round_robin(size)
        for _ in range(max_sweeps):
            if _off_norm(A) <= threshold:
                break
            for p, q in rounds:
                apq = A[p, q]
                active = np.abs(apq) > 1e-300
                if not active.any():
                    continue
                p, q, apq = p[active], q[active], apq[active]
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                J = np.eye(size)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J

    values = np.diag(A)[:n].copy()
    vectors = V[:n, :n].copy()
    order = np.argsort(values, kind="stable")
    return Spectrum(values[order], vectors[:, order])


def optimal_step(lambda2: float, lambda_n: float) -> float:
    """Step size minimizing ``max(|1 - s*lambda2|, |1 - s*lambda_n|)``."""
    if lambda2 <= 1e-9 * max(1.0, abs(lambda_n)):
        raise DisconnectedGraphError(
            f"algebraic connectivity {lambda2:.3g} is not positive; consensus is unreachable")
    if lambda_n < lambda2:
        raise SpectralError("largest eigenvalue is below the second smallest")
    return 2.0 / (lambda2 + lambda_n)


def contraction_norm_from_spectrum(spectrum: Spectrum, delta: float) -> float:
    if len(spectrum.values) < 2:
        return 0.0
    return max(abs(1.0 - delta * spectrum.algebraic_connectivity),
               abs(1.0 - delta * spectrum.largest))


def contraction_norm(L, delta: float) -> float:
    """Norm of ``I - delta*L`` restricted to the complement of the all-ones direction."""
    return contraction_norm_from_spectrum(sym_eigen(L), delta)


def laplacian_step(L) -> tuple[float, float]:
    """Optimal step for a Laplacian together with the contraction norm it achieves."""
    spec = sym_eigen(L)
    delta = optimal_step(spec.algebraic_connectivity, spec.largest)
    return delta, contraction_norm_from_spectrum(spec, delta)
