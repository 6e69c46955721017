"""Energy-constrained distributed average consensus with selective link activation.

At every iteration a budgeted quadratic program scores the links by how much
they reduce disagreement, and a randomized rounding of its relaxed solution
decides which links transmit. Both a centralized (global) and a per-node
(local) selection rule are provided, together with topology generators, a
simulation engine and a command-line front end.
"""

from .consensus import disagreement, full_update, has_converged, init_states, masked_update, spread
from .qp import BudgetedQp, QpResult, project, sample, solve
from .select_global import GlobalLinkSelector, Selection, build_global_qp, select_links_global
from .select_local import LocalLinkSelector, build_local_qp, merge_probabilities, select_links_local
from .sim import (ComparisonResult, ConfigError, Experiment, RunResult, SimConfig, SweepPoint, compare,
                  expand_grid, run, sweep)
from .specfile import SpecError, format_spec, load_spec, parse_spec
from .spectral import Spectrum, contraction_norm, laplacian_step, optimal_step, sym_eigen
from .topology import (FAMILIES, Graph, TopologyError, build_laplacian, generate, is_connected, load_graph,
                       save_graph)

__version__ = "0.1.0"

__all__ = [
    "BudgetedQp", "ComparisonResult", "ConfigError", "Experiment", "FAMILIES", "GlobalLinkSelector", "Graph",
    "LocalLinkSelector", "QpResult", "RunResult", "Selection", "SimConfig", "SpecError", "Spectrum", "SweepPoint",
    "TopologyError", "build_global_qp", "build_laplacian", "build_local_qp", "compare", "contraction_norm",
    "disagreement", "expand_grid", "format_spec", "full_update", "generate", "has_converged", "init_states",
    "is_connected", "laplacian_step", "load_graph", "load_spec", "masked_update", "merge_probabilities",
    "optimal_step", "parse_spec", "project", "run", "sample", "save_graph", "select_links_global",
    "select_links_local", "solve", "spread", "sweep", "sym_eigen",
]
