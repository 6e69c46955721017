"""Undirected graphs, Laplacians and the four network families used in experiments."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_GENERATION_ATTEMPTS = 200
FAMILIES = ("uniform", "clustered", "star", "chain")


class TopologyError(ValueError):
    """Raised for invalid graphs or when a generator cannot produce a connected graph."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph with per-edge costs.

    Edges are stored in canonical order, sorted by ``(min endpoint, max endpoint)``,
    so the index of an edge is a deterministic function of the edge set.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    costs: np.ndarray = field(repr=False)
    _adjacency: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)
    _incident: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError(f"node count must be positive, got {self.n}")
        costs = np.asarray(self.costs, dtype=float)
        if costs.shape != (len(self.edges),):
            raise TopologyError("edge_costs length must equal the number of edges")
        if np.any(costs < 0) or not np.all(np.isfinite(costs)):
            raise TopologyError("edge costs must be finite and nonnegative")
        seen = set()
        prev = None
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise TopologyError(f"edge ({u}, {v}) has a node outside [0, {self.n})")
            if u == v:
                raise TopologyError(f"self-loop at node {u}")
            if u > v:
                raise TopologyError(f"edge ({u}, {v}) is not in canonical (min, max) form")
            if (u, v) in seen:
                raise TopologyError(f"duplicate edge ({u}, {v})")
            if prev is not None and (u, v) < prev:
                raise TopologyError("edges are not in canonical sorted order")
            seen.add((u, v))
            prev = (u, v)
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)

        adj = [set() for _ in range(self.n)]
        inc = [[] for _ in range(self.n)]
        for e, (u, v) in enumerate(self.edges):
            adj[u].add(v)
            adj[v].add(u)
            inc[u].append(e)
            inc[v].append(e)
        object.__setattr__(self, "_adjacency", tuple(frozenset(a) for a in adj))
        object.__setattr__(self, "_incident", tuple(tuple(i) for i in inc))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges and np.array_equal(self.costs, other.costs)

    def __hash__(self):
        return hash((self.n, self.edges, self.costs.tobytes()))

    @classmethod
    def from_edges(cls, n, edges, costs=None) -> "Graph":
        """Build a graph from an arbitrary iterable of node pairs, canonicalizing order.

        Costs, when given, follow the order of ``edges`` as passed in.
        """
        pairs = [(int(min(u, v)), int(max(u, v))) for u, v in edges]
        if costs is None:
            costs = np.ones(len(pairs))
        costs = np.asarray(costs, dtype=float)
        if costs.shape != (len(pairs),):
            raise TopologyError("edge_costs length must equal the number of edges")
        order = sorted(range(len(pairs)), key=lambda i: pairs[i])
        return cls(int(n), tuple(pairs[i] for i in order), costs[order])

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adjacency], dtype=int)

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``(u, v)`` of edge endpoints in canonical edge order."""
        if not self.edges:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        arr = np.asarray(self.edges, dtype=int)
        return arr[:, 0], arr[:, 1]

    def _check_node(self, v):
        if not 0 <= v < self.n:
            raise TopologyError(f"unknown node id {v}")


def neighbors(g: Graph, v: int) -> frozenset[int]:
    g._check_node(v)
    return g._adjacency[v]


def incident_edges(g: Graph, v: int) -> tuple[int, ...]:
    """Indices of edges touching ``v``, in increasing edge order."""
    g._check_node(v)
    return g._incident[v]


def is_connected(g: Graph) -> bool:
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in g._adjacency[v]:
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return bool(seen.all())


def build_laplacian(g: Graph) -> np.ndarray:
    L = np.zeros((g.n, g.n))
    u, v = g.endpoints()
    L[u, v] = -1.0
    L[v, u] = -1.0
    L[np.diag_indices(g.n)] = g.degrees
    return L


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _derived_seed(seed, attempt):
    # attempt 0 uses the seed itself so that callers can reason about a single draw
    return seed if attempt == 0 else np.random.SeedSequence([int(seed), attempt])


def _pair_stubs(stubs, rng):
    """Randomly pair stubs, re-pairing only the stubs that formed loops or repeats.

    Returns ``None`` when the leftover stubs cannot form any new simple edge.
    """
    edges = set()
    stubs = list(stubs)
    while stubs:
        rng.shuffle(stubs)
        leftover = []
        for s1, s2 in zip(stubs[::2], stubs[1::2]):
            a, b = min(s1, s2), max(s1, s2)
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover.extend((s1, s2))
        if leftover and not _can_extend(edges, leftover):
            return None
        stubs = leftover
    return edges


def _can_extend(edges, stubs):
    nodes = sorted(set(stubs))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if (a, b) not in edges:
                return True
    return False


def gen_uniform(n: int, d: int, seed=0) -> Graph:
    """Random graph whose nodes all have (close to) degree ``d``.

    Configuration-model stub pairing. When ``n * d`` is odd one node receives a
    single extra stub, so the mean degree is within ``1/n`` of ``d``.
    """
    if n < 2:
        raise TopologyError("uniform graph needs n >= 2")
    if not 1 <= d < n:
        raise TopologyError(f"target degree must satisfy 1 <= d < n, got d={d}, n={n}")
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _rng(_derived_seed(seed, attempt))
        stubs = [v for v in range(n) for _ in range(int(d))]
        if len(stubs) % 2:
            stubs.append(int(rng.integers(n)))
        edges = _pair_stubs(stubs, rng)
        if edges is None:
            continue
        g = Graph.from_edges(n, edges)
        if is_connected(g) and abs(2 * g.m / n - d) <= 0.1 * d:
            return g
    raise TopologyError(f"no connected uniform graph (n={n}, d={d}) after {MAX_GENERATION_ATTEMPTS} attempts")


def gen_clustered(seed=0, clusters=4, cluster_size=25, hubs_per_cluster=2,
                  hub_external=26, target_degree=5.0) -> Graph:
    """Clustered network with a few high-degree hubs bridging the clusters.

    Each hub links to every peer in its own cluster and to ``hub_external``
    distinct non-hub nodes drawn uniformly from the other clusters. Random
    intra-cluster links between non-hubs then lift the non-hub mean degree to
    about ``target_degree``.
    """
    n = clusters * cluster_size
    members = [list(range(k * cluster_size, (k + 1) * cluster_size)) for k in range(clusters)]
    hubs = [grp[:hubs_per_cluster] for grp in members]
    hub_set = {h for hs in hubs for h in hs}
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _rng(_derived_seed(seed, attempt))
        edges = set()
        for k, grp in enumerate(members):
            for h in hubs[k]:
                for v in grp:
                    if v != h:
                        edges.add((min(h, v), max(h, v)))
                outside = [v for j, other in enumerate(members) if j != k
                           for v in other if v not in hub_set]
                for v in rng.choice(outside, size=hub_external, replace=False):
                    edges.add((min(h, int(v)), max(h, int(v))))

        degree = np.zeros(n)
        for a, b in edges:
            degree[a] += 1
            degree[b] += 1
        for k, grp in enumerate(members):
            plain = [v for v in grp if v not in hub_set]
            missing = target_degree * len(plain) - degree[plain].sum()
            n_extra = max(0, int(round(missing / 2)))
            candidates = [(a, b) for i, a in enumerate(plain) for b in plain[i + 1:]]
            pick = rng.choice(len(candidates), size=min(n_extra, len(candidates)), replace=False)
            edges.update(candidates[i] for i in pick)

        g = Graph.from_edges(n, edges)
        if is_connected(g):
            return g
    raise TopologyError("could not generate a connected clustered graph")


def gen_star(n: int) -> Graph:
    if n < 2:
        raise TopologyError("star needs n >= 2")
    return Graph.from_edges(n, [(0, k) for k in range(1, n)])


def gen_chain(n: int) -> Graph:
    if n < 2:
        raise TopologyError("chain needs n >= 2")
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def generate(family: str, n: int | None = None, d: int | None = None, seed=0) -> Graph:
    """Dispatch to one of the named generators: uniform, clustered, star or chain."""
    if family == "uniform":
        if n is None or d is None:
            raise TopologyError("uniform family needs n and d")
        return gen_uniform(n, d, seed)
    if family == "clustered":
        return gen_clustered(seed)
    if family == "star":
        if n is None:
            raise TopologyError("star family needs n")
        return gen_star(n)
    if family == "chain":
        if n is None:
            raise TopologyError("chain family needs n")
        return gen_chain(n)
    raise TopologyError(f"unknown topology family {family!r}")


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v} {c:.9g}" for (u, v), c in zip(g.edges, g.costs)]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise TopologyError("empty edge-list file")
    try:
        n, m = (int(t) for t in rows[0])
        body = [(int(r[0]), int(r[1]), float(r[2]) if len(r) > 2 else 1.0) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise TopologyError(f"malformed edge-list: {exc}") from None
    if len(body) != m:
        raise TopologyError(f"header declares {m} edges but file has {len(body)}")
    pairs = [(u, v) for u, v, _ in body]
    if any(u > v for u, v in pairs):
        raise TopologyError("edge-list rows must list the smaller endpoint first")
    return Graph(n, tuple(pairs), np.array([c for _, _, c in body]))


def save_graph(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g))


def load_graph(path) -> Graph:
    return parse_edge_list(Path(path).read_text())
