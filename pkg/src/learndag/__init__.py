"""learnDAG: structure learning of Poisson directed acyclic graphs from count data."""
from .core import (
    Config,
    ConfigError,
    CountMatrix,
    CycleError,
    Dag,
    DataError,
    LearnDagError,
    NeighborSets,
    PruneMode,
    ScoreKind,
    has_path,
    topological_order,
)
from .glm import GlmFit, fit_poisson, node_loglik
from .pipeline import LearnResult, learn_dag
from .simulate import Metrics, gen_graph, gen_params, run_sweep, sample, structure_metrics

__version__ = "0.1.0"

__all__ = [
    "Config", "ConfigError", "CountMatrix", "CycleError", "Dag", "DataError",
    "GlmFit", "LearnDagError", "LearnResult", "Metrics", "NeighborSets", "PruneMode",
    "ScoreKind", "fit_poisson", "gen_graph", "gen_params", "has_path", "learn_dag",
    "node_loglik", "run_sweep", "sample", "structure_metrics", "topological_order",
]
