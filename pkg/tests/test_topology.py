import numpy as np
import pytest
from hypothesis import given, strategies as st

from active_consensus.topology import (
    Graph, TopologyError, build_laplacian, format_edge_list, gen_chain, gen_clustered, gen_star,
    gen_uniform, generate, incident_edges, is_connected, load_graph, neighbors, parse_edge_list, save_graph,
)
from helpers import random_connected_graph


class TestLaplacian:
    def test_chain_of_three(self):
        L = build_laplacian(gen_chain(3))
        np.testing.assert_array_equal(L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_single_node(self):
        g = Graph(1, (), np.zeros(0))
        np.testing.assert_array_equal(build_laplacian(g), [[0.0]])

    def test_star(self):
        L = build_laplacian(gen_star(4))
        np.testing.assert_array_equal(np.diag(L), [3, 1, 1, 1])
        for k in range(1, 4):
            assert L[0, k] == L[k, 0] == -1
        assert np.count_nonzero(L) == 4 + 6

    def test_quadratic_form_is_sum_of_edge_differences(self, rng):
        g = random_connected_graph(rng, 15)
        L = build_laplacian(g)
        for _ in range(100):
            x = rng.standard_normal(g.n)
            direct = sum((x[u] - x[v]) ** 2 for u, v in g.edges)
            assert abs(x @ L @ x - direct) <= 1e-9

    def test_rows_sum_to_zero(self, rng):
        L = build_laplacian(random_connected_graph(rng, 12))
        np.testing.assert_allclose(L.sum(axis=1), 0.0)
        np.testing.assert_array_equal(L, L.T)


class TestGraph:
    def test_from_edges_canonicalizes(self):
        g = Graph.from_edges(3, [(2, 1), (1, 0)], [5.0, 7.0])
        assert g.edges == ((0, 1), (1, 2))
        np.testing.assert_array_equal(g.costs, [7.0, 5.0])

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (0, 1)], [(0, 3)], [(1, 0)], [(1, 2), (0, 1)]])
    def test_invalid_edges_rejected(self, edges):
        with pytest.raises(TopologyError):
            Graph(3, tuple(edges), np.ones(len(edges)))

    def test_negative_cost_rejected(self):
        with pytest.raises(TopologyError):
            Graph(2, ((0, 1),), np.array([-1.0]))

    def test_cost_length_mismatch(self):
        with pytest.raises(TopologyError):
            Graph.from_edges(2, [(0, 1)], [1.0, 2.0])

    def test_costs_are_read_only(self):
        g = gen_chain(3)
        with pytest.raises(ValueError):
            g.costs[0] = 3.0

    def test_neighbors_and_incident_edges(self):
        assert neighbors(gen_chain(3), 1) == {0, 2}
        assert len(incident_edges(gen_star(4), 0)) == 3
        with pytest.raises(TopologyError):
            neighbors(gen_chain(3), 5)

    def test_disconnected(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        assert not is_connected(g)
        assert is_connected(gen_chain(4))

    def test_degree_sum(self, rng):
        for g in (gen_uniform(40, 6, 3), gen_clustered(1), gen_star(9), gen_chain(9),
                  random_connected_graph(rng, 20)):
            assert g.degrees.sum() == 2 * g.m


class TestGenerators:
    def test_uniform_desk_scale(self):
        g = gen_uniform(100, 5, seed=7)
        assert is_connected(g)
        assert 225 <= g.m <= 275

    def test_uniform_two_nodes(self):
        g = gen_uniform(2, 1, seed=0)
        assert g.edges == ((0, 1),)

    def test_uniform_is_deterministic(self):
        assert gen_uniform(100, 5, 7) == gen_uniform(100, 5, 7)
        assert gen_uniform(100, 5, 7).edges != gen_uniform(100, 5, 8).edges

    @given(n=st.integers(4, 40), d=st.integers(2, 6), seed=st.integers(0, 2**32 - 1))
    def test_uniform_degrees_are_near_target(self, n, d, seed):
        if d >= n:
            return
        g = gen_uniform(n, d, seed)
        assert is_connected(g)
        # every node has exactly d stubs; one node may carry an extra stub when n*d is odd
        assert np.sum(g.degrees != d) <= 1
        assert abs(g.degrees.mean() - d) <= 1.0 / n + 1e-12

    @pytest.mark.parametrize("n, d", [(1, 1), (5, 0), (5, 5)])
    def test_uniform_bad_parameters(self, n, d):
        with pytest.raises(TopologyError):
            gen_uniform(n, d)

    @pytest.mark.parametrize("seed", [0, 1, 2, 99])
    def test_clustered(self, seed):
        g = gen_clustered(seed)
        assert is_connected(g)
        deg = g.degrees
        assert np.sum(deg >= 50) == 8
        assert 4 <= deg[deg < 50].mean() <= 8

    def test_clustered_deterministic(self):
        assert gen_clustered(5) == gen_clustered(5)

    def test_star_and_chain(self):
        assert gen_star(4).edges == ((0, 1), (0, 2), (0, 3))
        assert gen_star(50).m == 49
        chain = gen_chain(10)
        assert chain.m == 9 and chain.degrees.max() == 2

    def test_generate_dispatch(self):
        assert generate("star", 5).m == 4
        assert generate("chain", 5).m == 4
        assert generate("uniform", 10, 3, 1) == gen_uniform(10, 3, 1)
        with pytest.raises(TopologyError):
            generate("ring", 5)
        with pytest.raises(TopologyError):
            generate("uniform", 10)


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        g = random_connected_graph(rng, 12, costs=True)
        path = tmp_path / "g.txt"
        save_graph(g, path)
        h = load_graph(path)
        assert h.edges == g.edges and h.n == g.n
        np.testing.assert_allclose(h.costs, g.costs, rtol=1e-8)
        assert format_edge_list(h) == format_edge_list(g)

    def test_format(self):
        assert format_edge_list(gen_chain(3)) == "3 2\n0 1 1\n1 2 1\n"

    @pytest.mark.parametrize("text", ["", "3 2\n0 1 1\n", "3 1\n0 x 1\n", "3 1\n2 1 1\n", "2 1\n0 1 -1\n"])
    def test_malformed(self, text):
        with pytest.raises(TopologyError):
            parse_edge_list(text)

    def test_cost_column_optional(self):
        g = parse_edge_list("2 1\n0 1\n")
        np.testing.assert_array_equal(g.costs, [1.0])
