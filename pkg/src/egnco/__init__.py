"""Unsupervised neural combinatorial optimization on graphs.

Penalty-relaxation training of a GIN whose rounded output solves max
clique, minimum vertex cover, or maximum independent set, with a
meta-trained variant optimized for one-step per-instance fine-tuning,
plus the classical greedy baselines and an evaluation harness.
"""

from .estimators import EgnSolver, MetaEgnSolver, as_graph
from .generators import RbParams, RrgParams, gen_er, gen_rb, gen_rrg
from .gin import FeatureInit, GinConfig, ModelParams, forward, init_params
from .graph import (
    Graph,
    complement,
    from_edge_list,
    induced_subgraph,
    is_clique,
    is_independent_set,
    is_vertex_cover,
)
from .harness import EvalInstance, RunRecord, apr, evaluate, run_baseline
from .heuristics import dga_mis, greedy_mvc, rga_mis, toenshoff_greedy_mc
from .problems import (
    DiscreteSolution,
    ProblemSpec,
    SoftAssignment,
    discrete_objective,
    exact_optimum,
    guarantee_check,
    problem,
    relaxed_loss,
    round_assignment,
)
from .training import (
    TrainConfig,
    TrainInstance,
    finetune_k_steps,
    finetune_one_step,
    train_egn,
    train_meta_egn,
)

__version__ = "0.1.0"

__all__ = [
    "EgnSolver",
    "MetaEgnSolver",
    "as_graph",
    "Graph",
    "from_edge_list",
    "complement",
    "induced_subgraph",
    "is_clique",
    "is_independent_set",
    "is_vertex_cover",
    "RbParams",
    "RrgParams",
    "gen_rb",
    "gen_rrg",
    "gen_er",
    "ProblemSpec",
    "problem",
    "SoftAssignment",
    "DiscreteSolution",
    "relaxed_loss",
    "discrete_objective",
    "round_assignment",
    "exact_optimum",
    "guarantee_check",
    "GinConfig",
    "ModelParams",
    "FeatureInit",
    "init_params",
    "forward",
    "TrainConfig",
    "TrainInstance",
    "train_egn",
    "train_meta_egn",
    "finetune_one_step",
    "finetune_k_steps",
    "rga_mis",
    "dga_mis",
    "greedy_mvc",
    "toenshoff_greedy_mc",
    "EvalInstance",
    "RunRecord",
    "apr",
    "evaluate",
    "run_baseline",
    "__version__",
]
