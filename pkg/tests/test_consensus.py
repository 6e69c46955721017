import numpy as np
import pytest
from hypothesis import given, strategies as st

from active_consensus.consensus import (
    decompose, disagreement, full_update, has_converged, init_states, masked_update, spread,
)
from active_consensus.spectral import laplacian_step
from active_consensus.topology import build_laplacian, gen_chain
from helpers import complete_graph, random_connected_graph


class TestInitStates:
    def test_standard_normal_moments(self):
        x = init_states(10_000, seed=3)
        assert -0.05 <= x.mean() <= 0.05
        assert 0.9 <= x.var() <= 1.1

    def test_deterministic(self):
        np.testing.assert_array_equal(init_states(50, 11), init_states(50, 11))

    def test_single_node(self):
        x = init_states(1, 0)
        assert x.shape == (1,) and has_converged(x)

    def test_accepts_generator(self):
        a = init_states(5, np.random.default_rng(4))
        np.testing.assert_array_equal(a, np.random.default_rng(4).standard_normal(5))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            init_states(0)


class TestUpdates:
    def test_two_node_average(self):
        L = build_laplacian(gen_chain(2))
        np.testing.assert_allclose(full_update([1.0, 0.0], L, 0.5), [0.5, 0.5])

    def test_zero_step_is_identity(self, rng):
        g = random_connected_graph(rng, 8)
        x = rng.standard_normal(8)
        np.testing.assert_array_equal(full_update(x, build_laplacian(g), 0.0), x)

    def test_k3_one_step(self):
        L = build_laplacian(complete_graph(3))
        np.testing.assert_allclose(full_update([1.0, 0.0, 0.0], L, 1 / 3), [1 / 3] * 3)

    def test_masked_all_ones_equals_full(self, rng):
        for _ in range(50):
            g = random_connected_graph(rng, int(rng.integers(2, 20)))
            x = rng.standard_normal(g.n)
            delta = rng.uniform(0, 0.5)
            a = masked_update(x, g, np.ones(g.m), delta)
            b = full_update(x, build_laplacian(g), delta)
            assert np.abs(a - b).max() <= 1e-12

    def test_masked_all_zeros(self, rng):
        g = random_connected_graph(rng, 6)
        x = rng.standard_normal(6)
        np.testing.assert_array_equal(masked_update(x, g, np.zeros(g.m), 0.3), x)

    def test_masked_chain(self):
        out = masked_update([1.0, 0.0, 0.0], gen_chain(3), [1, 0], 0.5)
        np.testing.assert_allclose(out, [0.5, 0.5, 0.0])

    def test_masked_equals_subgraph_laplacian(self, rng):
        g = random_connected_graph(rng, 10)
        x = rng.standard_normal(10)
        b = rng.integers(0, 2, g.m)
        Lb = np.zeros((10, 10))
        for e in np.flatnonzero(b):
            u, v = g.edges[e]
            Lb[[u, v], [u, v]] += 1
            Lb[u, v] -= 1
            Lb[v, u] -= 1
        np.testing.assert_allclose(masked_update(x, g, b, 0.2), x - 0.2 * Lb @ x, atol=1e-12)

    def test_returns_fresh_array(self):
        x = np.array([1.0, 0.0])
        y = masked_update(x, gen_chain(2), [1], 0.5)
        assert y is not x and x[0] == 1.0

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            masked_update([1.0, 0.0, 0.0], gen_chain(2), [1], 0.5)
        with pytest.raises(ValueError):
            masked_update([1.0, 0.0], gen_chain(2), [1, 1], 0.5)
        with pytest.raises(ValueError):
            full_update([1.0], np.eye(2), 0.1)

    @given(st.integers(0, 2**32 - 1))
    def test_mean_conserved_under_random_masks(self, seed):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(rng, int(rng.integers(2, 15)))
        x = rng.standard_normal(g.n)
        mu = x.mean()
        delta, _ = laplacian_step(build_laplacian(g))
        for _ in range(200):
            x = masked_update(x, g, rng.integers(0, 2, g.m), delta)
        assert abs(x.mean() - mu) <= 1e-9

    def test_mean_conserved_long_run(self, rng):
        g = random_connected_graph(rng, 12)
        x = rng.standard_normal(12)
        mu = x.mean()
        delta, _ = laplacian_step(build_laplacian(g))
        for _ in range(10_000):
            x = masked_update(x, g, rng.integers(0, 2, g.m), delta)
        assert abs(x.mean() - mu) <= 1e-9


class TestMetrics:
    def test_disagreement_examples(self):
        assert disagreement([1.0, 0.0], build_laplacian(gen_chain(2))) == 1.0
        assert disagreement([2.0] * 4, build_laplacian(gen_chain(4))) == 0.0
        assert disagreement([1.0, 0.0, -1.0], build_laplacian(gen_chain(3))) == 2.0

    def test_spread_and_convergence(self):
        assert spread([1.0, 0.0, -1.0]) == 2.0
        assert has_converged([3.0, 3.0, 3.0], 1e-3)
        assert has_converged([0.0, 5e-4], 1e-3)
        assert not has_converged([0.0, 1e-3], 1e-3)

    def test_decompose(self):
        mu, diff = decompose([1.0, 0.0])
        assert mu == 0.5
        np.testing.assert_allclose(diff, [0.5, -0.5])
        mu, diff = decompose([4.0, 4.0])
        assert mu == 4.0 and not diff.any()
        mu, diff = decompose([3.0, 0.0, 0.0])
        assert mu == 1.0
        np.testing.assert_allclose(diff, [2, -1, -1])


def test_full_update_contraction_and_decay(rng):
    """Disagreement shrinks at least by the squared contraction norm each step."""
    for _ in range(10):
        g = random_connected_graph(rng, int(rng.integers(3, 30)))
        L = build_laplacian(g)
        delta, norm = laplacian_step(L)
        x = rng.standard_normal(g.n)
        s0, mu = spread(x), x.mean()
        for t in range(1, 60):
            prev = disagreement(x, L)
            x = full_update(x, L, delta)
            assert disagreement(x, L) <= norm ** 2 * prev + 1e-9
            assert spread(x) <= max(s0 * (norm + 0.01) ** t * g.n, 1e-12)  # floor: rounding
        assert abs(x.mean() - mu) <= 1e-9
