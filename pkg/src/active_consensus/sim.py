"""Experiment engine: single runs, selective-vs-baseline comparisons and parameter sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import consensus
from .select_global import GlobalLinkSelector
from .select_local import PREDICTION_SIGNS, LocalLinkSelector
from .spectral import laplacian_step
from .topology import FAMILIES, Graph, TopologyError, build_laplacian, generate, is_connected, load_graph

log = logging.getLogger(__name__)

SCHEMES = ("baseline", "global", "local")

# independent random streams per replicate
_TOPOLOGY, _STATES, _SELECTION, _FAILURES = range(4)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    topology: str = "uniform"
    n: int | None = 100
    d: int | None = 5
    topology_seed: int | None = None
    graph_path: str | None = None
    scheme: str = "global"
    alpha: float = 0.3
    delta: float | str = "auto"
    epsilon: float = consensus.DEFAULT_TOLERANCE
    p_fail: float = 0.0
    seed: int = 0
    max_iters: int = 1_000_000
    replicates: int = 1
    prediction_sign: str = "consistent"
    include_own_link: bool = True
    qp_tol: float = 1e-6
    qp_gap_tol: float = 1e-3

    def __post_init__(self):
        if self.topology not in FAMILIES + ("file",):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.topology == "file" and not self.graph_path:
            raise ConfigError("topology = file needs graph_path")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.p_fail <= 1.0:
            raise ConfigError(f"p_fail must lie in [0, 1], got {self.p_fail}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.delta != "auto" and not (isinstance(self.delta, (int, float)) and self.delta > 0):
            raise ConfigError(f"delta must be 'auto' or a positive number, got {self.delta!r}")
        if self.max_iters < 0 or self.replicates < 1:
            raise ConfigError("max_iters must be >= 0 and replicates >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.prediction_sign not in PREDICTION_SIGNS:
            raise ConfigError(f"prediction_sign must be one of {PREDICTION_SIGNS}")
        if not self.qp_tol > 0:
            raise ConfigError("qp_tol must be positive")
        if not self.qp_gap_tol >= 0:
            raise ConfigError("qp_gap_tol must be nonnegative")


class TraceRecord(NamedTuple):
    t: int
    disagreement: float
    spread: float
    links_selected: int
    links_survived: int


@dataclass
class RunResult:
    iterations: int
    total_cost: float
    total_cost_survived: float
    converged: bool
    trace: list[TraceRecord] = field(repr=False)
    initial_mean: float = 0.0
    final_mean: float = 0.0
    qp_converged: bool = True


@dataclass
class ComparisonResult:
    selective: RunResult
    baseline: RunResult

    @property
    def valid(self) -> bool:
        return self.selective.converged and self.baseline.converged and self.baseline.total_cost > 0

    @property
    def cost_ratio(self) -> float:
        return self.selective.total_cost / self.baseline.total_cost if self.valid else math.nan

    @property
    def time_ratio(self) -> float:
        return self.selective.iterations / self.baseline.iterations if self.valid else math.nan


def stream(seed: int, replicate: int, which: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, replicate, which]))


def derived_topology_seed(seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([seed, replicate, _TOPOLOGY]).generate_state(1)[0])


def build_topology(config: SimConfig, replicate: int = 0) -> Graph:
    if config.topology == "file":
        g = load_graph(config.graph_path)
    else:
        seed = config.topology_seed
        if seed is None:
            seed = derived_topology_seed(config.seed, replicate)
        g = generate(config.topology, config.n, config.d, seed)
    if not is_connected(g):
        raise TopologyError("topology is disconnected; consensus is unreachable")
    return g


def apply_failures(mask, p_fail: float, rng: np.random.Generator) -> np.ndarray:
    """Clear each set bit independently with probability ``p_fail``.

    One uniform draw is consumed per edge whether or not the edge is selected,
    which keeps failure streams aligned across schemes.
    """
    mask = np.asarray(mask)
    keep = rng.random(mask.shape[0]) >= p_fail
    return (mask.astype(bool) & keep).astype(np.int8)


class Experiment:
    """Everything about one replicate that all schemes share: graph, step and initial states."""

    def __init__(self, config: SimConfig, replicate: int = 0, graph: Graph | None = None):
        self.config = config
        self.replicate = replicate
        self.graph = build_topology(config, replicate) if graph is None else graph
        self.L = build_laplacian(self.graph)
        if config.delta == "auto":
            self.delta, self.contraction = laplacian_step(self.L)
        else:
            self.delta, self.contraction = float(config.delta), math.nan
        self.x0 = consensus.init_states(self.graph.n, stream(config.seed, replicate, _STATES))
        self._selectors = {}

    def selector(self, scheme: str):
        if scheme not in self._selectors:
            if scheme == "global":
                self._selectors[scheme] = GlobalLinkSelector(self.graph, self.L)
            else:
                self._selectors[scheme] = LocalLinkSelector(self.graph, self.config.prediction_sign,
                                                            self.config.include_own_link)
        return self._selectors[scheme]

    def run(self, scheme: str | None = None) -> RunResult:
        cfg = self.config
        scheme = cfg.scheme if scheme is None else scheme
        g, L, delta = self.graph, self.L, self.delta
        select_rng = stream(cfg.seed, self.replicate, _SELECTION)
        fail_rng = stream(cfg.seed, self.replicate, _FAILURES)
        everything = np.ones(g.m, dtype=np.int8)
        x = self.x0.copy()
        trace = []
        cost = cost_survived = 0.0
        qp_ok = True
        t = 0
        while not consensus.has_converged(x, cfg.epsilon) and t < cfg.max_iters:
            if scheme == "baseline":
                mask = everything
            else:
                sel = self.selector(scheme).select(x, delta, cfg.alpha, select_rng, tol=cfg.qp_tol,
                                                   gap_tol=cfg.qp_gap_tol or None)
                mask = sel.mask
                qp_ok &= sel.converged
            survived = apply_failures(mask, cfg.p_fail, fail_rng)
            x = consensus.masked_update(x, g, survived, delta)
            t += 1
            cost += float(g.costs @ mask)
            cost_survived += float(g.costs @ survived)
            trace.append(TraceRecord(t, float(x @ L @ x), consensus.spread(x),
                                     int(mask.sum()), int(survived.sum())))
            if not np.all(np.isfinite(x)):
                log.warning("states diverged at t=%d (delta=%g)", t, delta)
                break
        converged = bool(np.all(np.isfinite(x))) and consensus.has_converged(x, cfg.epsilon)
        if not converged:
            log.info("%s run stopped without consensus after %d iterations", scheme, t)
        return RunResult(t, cost, cost_survived, converged, trace,
                         float(self.x0.mean()), float(x.mean()), qp_ok)


def run(config: SimConfig, replicate: int = 0) -> RunResult:
    """Simulate one scheme until the state spread drops below ``epsilon`` or ``max_iters``."""
    return Experiment(config, replicate).run()


def compare(config: SimConfig, replicate: int = 0) -> ComparisonResult:
    """Run the selective scheme and the all-links baseline on the same graph and initial states."""
    if config.scheme == "baseline":
        raise ConfigError("compare needs a selective scheme (global or local)")
    exp = Experiment(config, replicate)
    return ComparisonResult(exp.run(), exp.run("baseline"))


@dataclass
class ReplicateRow:
    config: SimConfig
    replicate: int
    n: int
    mean_degree: float
    run: RunResult
    cost_ratio: float
    time_ratio: float
    baseline_converged: bool = True

    @property
    def ok(self) -> bool:
        """Both the run and its baseline reached consensus."""
        return self.run.converged and self.baseline_converged


def run_replicate(config: SimConfig, replicate: int) -> ReplicateRow:
    """One replicate of a grid point; baseline rows carry unit ratios when converged."""
    exp = Experiment(config, replicate)
    g = exp.graph
    degree = 2.0 * g.m / g.n
    if config.scheme == "baseline":
        res = exp.run()
        ratio = 1.0 if res.converged and res.iterations > 0 else math.nan
        return ReplicateRow(config, replicate, g.n, degree, res, ratio, ratio, res.converged)
    cmp = ComparisonResult(exp.run(), exp.run("baseline"))
    return ReplicateRow(config, replicate, g.n, degree, cmp.selective, cmp.cost_ratio, cmp.time_ratio,
                        cmp.baseline.converged)


def _run_task(task):
    return run_replicate(*task)


@dataclass
class SweepPoint:
    config: SimConfig
    rows: list[ReplicateRow]

    def stats(self) -> dict[str, tuple[float, float]]:
        """Mean and sample standard deviation of the per-replicate metrics."""
        metrics = {
            "iterations": [r.run.iterations for r in self.rows],
            "total_cost_attempted": [r.run.total_cost for r in self.rows],
            "total_cost_survived": [r.run.total_cost_survived for r in self.rows],
            "converged": [float(r.ok) for r in self.rows],
            "cost_ratio": [r.cost_ratio for r in self.rows],
            "time_ratio": [r.time_ratio for r in self.rows],
        }
        out = {}
        for key, values in metrics.items():
            arr = np.asarray(values, dtype=float)
            mean = float(arr.mean())
            sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            out[key] = (mean, sd)
        return out


def expand_grid(grid: dict[str, Sequence] | None) -> list[dict]:
    """Cartesian product of ``{key: values}`` in key-insertion order."""
    points = [{}]
    for key, values in (grid or {}).items():
        points = [{**p, key: v} for p in points for v in values]
    return points


def sweep(grid: Sequence[dict], base: SimConfig, jobs: int = 1) -> list[SweepPoint]:
    """Run ``base.replicates`` replicates at every grid point (each a dict of config overrides).

    Replicate ``i`` of every point draws from streams seeded by ``(seed, i)``, so
    the output does not depend on ``jobs`` or on execution order.
    """
    configs = []
    for delta in grid:
        try:
            configs.append(replace(base, **delta))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
    tasks = [(cfg, i) for cfg in configs for i in range(cfg.replicates)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    points, k = [], 0
    for cfg in configs:
        points.append(SweepPoint(cfg, rows[k:k + cfg.replicates]))
        k += cfg.replicates
    return points


def config_dict(config: SimConfig) -> dict:
    return asdict(config)
