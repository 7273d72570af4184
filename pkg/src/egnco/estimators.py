"""Scikit-learn style front end: fit on a collection of graphs, predict
node subsets for new ones.

`EgnSolver` trains with plain empirical risk minimization of the relaxed
penalty loss; `MetaEgnSolver` trains the same network so that one gradient
step per instance lands well, and can spend that step at predict time.
Both expose get_params/set_params through BaseEstimator, so they clone and
grid-search like any other estimator.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .gin import FeatureInit, GinConfig, default_config, forward, init_params
from .graph import Graph, from_edge_list
from .harness import EvalInstance, evaluate
from .heuristics import dga_mis, greedy_mvc, toenshoff_greedy_mc
from .problems import DiscreteSolution, problem
from .training import (
    TrainConfig,
    TrainInstance,
    finetune_one_step,
    train_egn,
    train_meta_egn,
)

__all__ = ["as_graph", "EgnSolver", "MetaEgnSolver"]


def as_graph(obj) -> Graph:
    """Coerce supported inputs to a Graph.

    Accepts a Graph, an (n, edge_list) pair, or a square 0/1 adjacency
    matrix (symmetric, zero diagonal).
    """
    if isinstance(obj, Graph):
        return obj
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], int):
        return from_edge_list(obj[0], list(obj[1]))
    arr = np.asarray(obj)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        if not np.array_equal(arr, arr.T):
            raise ValueError("adjacency matrix must be symmetric")
        n = arr.shape[0]
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if arr[i, j]]
        return from_edge_list(n, edges)
    raise TypeError(
        "expected a Graph, an (n, edges) pair, or a square adjacency matrix; "
        f"got {type(obj).__name__}"
    )


class _SolverBase(BaseEstimator):
    _meta = False

    def __init__(
        self,
        problem="mis",
        beta=None,
        layers=None,
        hidden_dim=64,
        mlp_depth=2,
        max_iters=200,
        batch_size=32,
        inner_lr=5e-5,
        outer_lr=None,
        optimizer="adam",
        meta_mode="exact",
        eval_every=50,
        feature_scheme="auto",
        protocol="accurate",
        finetune=False,
        seed=0,
    ):
        self.problem = problem
        self.beta = beta
        self.layers = layers
        self.hidden_dim = hidden_dim
        self.mlp_depth = mlp_depth
        self.max_iters = max_iters
        self.batch_size = batch_size
        self.inner_lr = inner_lr
        self.outer_lr = outer_lr
        self.optimizer = optimizer
        self.meta_mode = meta_mode
        self.eval_every = eval_every
        self.feature_scheme = feature_scheme
        self.protocol = protocol
        self.finetune = finetune
        self.seed = seed

    # -- configuration plumbing -------------------------------------------
    def _spec(self):
        return problem(self.problem, self.beta)

    def _gin_config(self) -> GinConfig:
        kwargs = dict(hidden_dim=self.hidden_dim, mlp_depth=self.mlp_depth)
        if self.layers is None:
            return default_config(self._spec().kind, **kwargs)
        return GinConfig(layers=self.layers, **kwargs)

    def _resolved_scheme(self) -> str:
        if self.feature_scheme != "auto":
            return self.feature_scheme
        return "greedy_dga" if self._spec().kind == "mis" else "single_node_seed"

    def _train_feature(self, g: Graph) -> Optional[FeatureInit]:
        scheme = self._resolved_scheme()
        if scheme == "single_node_seed":
            return None  # resampled every visit during training
        if scheme == "constant":
            return FeatureInit.constant()
        kind = self._spec().kind
        greedy = {
            "mis": dga_mis,
            "mvc": greedy_mvc,
            "mc": toenshoff_greedy_mc,
        }[kind]
        return FeatureInit.greedy_solution(greedy(g))

    # -- estimator API ------------------------------------------------------
    def fit(self, X: Sequence, y=None, val: Sequence = ()):
        """Train on an iterable of graphs. y is ignored (unsupervised)."""
        spec = self._spec()
        graphs = [as_graph(g) for g in X]
        if not graphs:
            raise ValueError("fit needs at least one graph")
        instances = [TrainInstance(g, self._train_feature(g)) for g in graphs]
        val_instances = [
            TrainInstance(g, self._train_feature(g))
            for g in (as_graph(v) for v in val)
        ]
        cfg = TrainConfig(
            max_iters=self.max_iters,
            inner_lr=self.inner_lr,
            outer_lr=self.outer_lr,
            batch_size=self.batch_size,
            optimizer=self.optimizer,
            meta_mode=self.meta_mode,
            eval_every=self.eval_every,
            seed=self.seed,
        )
        trainer = train_meta_egn if self._meta else train_egn
        state = trainer(
            instances, spec, cfg, gin_config=self._gin_config(), val=val_instances
        )
        self.model_params_ = state.best_params
        self.train_state_ = state
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_params_"):
            raise NotFittedError(
                f"this {type(self).__name__} instance is not fitted yet"
            )

    def solve(self, graph) -> DiscreteSolution:
        """Best feasible solution for one graph under the configured protocol."""
        self._check_fitted()
        g = as_graph(graph)
        spec = self._spec()
        protocol = "finetune" if self.finetune else self.protocol
        rec = evaluate(
            self.model_params_,
            [EvalInstance("g", g)],
            spec,
            protocol,
            feature_scheme=self._resolved_scheme(),
            seed=self.seed,
            alpha=self.inner_lr,
        )[0]
        return rec.solution

    def predict(self, X) -> List[np.ndarray]:
        """Selected-node index arrays, one per input graph."""
        if isinstance(X, (Graph, tuple)) or (
            isinstance(X, np.ndarray) and X.ndim == 2
        ):
            raise TypeError("predict expects a sequence of graphs")
        return [np.asarray(self.solve(g).selected, dtype=np.int64) for g in X]

    def predict_soft(self, X) -> List[np.ndarray]:
        """Raw network outputs in (0,1)^n, one per input graph (no rounding,
        single deterministic feature)."""
        self._check_fitted()
        out = []
        for obj in X:
            g = as_graph(obj)
            feat = self._train_feature(g) or FeatureInit.single_node_seed(0)
            out.append(forward(self.model_params_, g, feat).values)
        return out

    def fine_tuned_params(self, graph, alpha: Optional[float] = None):
        """Parameters after one plain gradient step on this graph."""
        self._check_fitted()
        g = as_graph(graph)
        feat = self._train_feature(g) or FeatureInit.single_node_seed(0)
        return finetune_one_step(
            self.model_params_, g, feat, self._spec(),
            self.inner_lr if alpha is None else alpha,
        )


class EgnSolver(_SolverBase):
    """Penalty-relaxation solver trained by empirical risk minimization."""

    _meta = False


class MetaEgnSolver(_SolverBase):
    """Penalty-relaxation solver meta-trained for per-instance adaptation.

    Set finetune=True to spend one gradient step on each graph at predict
    time (the step the training objective optimizes for).
    """

    _meta = True
