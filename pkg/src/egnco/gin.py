"""GIN encoder mapping (graph, node features) to a soft assignment in (0,1)^n.

Each layer updates h_v <- MLP((1+eps)*h_v + sum of neighbor h_u); a linear
head plus sigmoid turns the final hidden state into one value per node.
Message passing cannot tell apart the nodes of a regular graph under
constant features, so the feature schemes below (single seed node, greedy
solution indicator) exist to break that symmetry.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import autodiff as ad
from .graph import Graph
from .problems import DiscreteSolution, SoftAssignment

__all__ = [
    "GinConfig",
    "ModelParams",
    "FeatureInit",
    "GraphTensors",
    "make_features",
    "init_params",
    "forward",
    "forward_tensor",
    "default_config",
]

# Layer-count defaults per problem kind.
DEFAULT_LAYERS = {"mc": 4, "mvc": 4, "mis": 6}


@dataclass(frozen=True)
class GinConfig:
    layers: int
    hidden_dim: int = 64
    mlp_depth: int = 2
    input_dim: int = 1
    epsilon: float = 0.0

    def __post_init__(self):
        if self.layers < 1 or self.hidden_dim < 1:
            raise ValueError("layers and hidden_dim must be >= 1")
        if self.mlp_depth < 1 or self.input_dim < 1:
            raise ValueError("mlp_depth and input_dim must be >= 1")

    def fingerprint(self) -> str:
        text = (
            f"gin:{self.layers}:{self.hidden_dim}:{self.mlp_depth}"
            f":{self.input_dim}:{self.epsilon!r}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def weight_shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """Named parameter shapes in canonical order."""
        shapes: List[Tuple[str, Tuple[int, ...]]] = []
        in_dim = self.input_dim
        for layer in range(self.layers):
            for d in range(self.mlp_depth):
                shapes.append((f"layer{layer}.lin{d}.weight", (in_dim, self.hidden_dim)))
                shapes.append((f"layer{layer}.lin{d}.bias", (self.hidden_dim,)))
                in_dim = self.hidden_dim
        shapes.append(("head.weight", (self.hidden_dim,)))
        shapes.append(("head.bias", ()))
        return shapes


def default_config(problem_kind: str, **overrides) -> GinConfig:
    return GinConfig(layers=DEFAULT_LAYERS[problem_kind], **overrides)


@dataclass(frozen=True)
class ModelParams:
    """All learnable arrays plus the architecture they belong to."""

    config: GinConfig
    weights: Tuple[np.ndarray, ...]
    fingerprint: str

    def __post_init__(self):
        expected = self.config.weight_shapes()
        if len(self.weights) != len(expected):
            raise ValueError(
                f"expected {len(expected)} weight arrays, got {len(self.weights)}"
            )
        for (name, shape), w in zip(expected, self.weights):
            if w.shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {w.shape}")
        if self.fingerprint != self.config.fingerprint():
            raise ValueError("architecture fingerprint does not match config")

    def named_weights(self):
        for (name, _), w in zip(self.config.weight_shapes(), self.weights):
            yield name, w

    def replace_weights(self, weights) -> "ModelParams":
        return ModelParams(
            config=self.config,
            weights=tuple(np.asarray(w, dtype=np.float64) for w in weights),
            fingerprint=self.fingerprint,
        )

    def as_tensors(self) -> List[ad.Tensor]:
        return [ad.tensor(w) for w in self.weights]


@dataclass(frozen=True)
class FeatureInit:
    """Input feature scheme: which nodes start 'on'."""

    scheme: str  # single_node_seed | greedy_solution | constant
    node_id: Optional[int] = None
    solution: Optional[DiscreteSolution] = None

    @classmethod
    def single_node_seed(cls, node_id: int) -> "FeatureInit":
        return cls(scheme="single_node_seed", node_id=int(node_id))

    @classmethod
    def greedy_solution(cls, solution: DiscreteSolution) -> "FeatureInit":
        return cls(scheme="greedy_solution", solution=solution)

    @classmethod
    def constant(cls) -> "FeatureInit":
        return cls(scheme="constant")


def make_features(g: Graph, scheme: FeatureInit) -> np.ndarray:
    """(n, 1) input feature matrix for the given scheme."""
    if scheme.scheme == "single_node_seed":
        if scheme.node_id is None or not (0 <= scheme.node_id < g.n):
            raise ValueError(f"seed node {scheme.node_id} out of range for n={g.n}")
        feat = np.zeros((g.n, 1))
        feat[scheme.node_id, 0] = 1.0
        return feat
    if scheme.scheme == "greedy_solution":
        if scheme.solution is None or len(scheme.solution.values) != g.n:
            raise ValueError("greedy feature needs a solution of length n")
        return scheme.solution.values.astype(np.float64).reshape(g.n, 1)
    if scheme.scheme == "constant":
        return np.ones((g.n, 1))
    raise ValueError(f"unknown feature scheme: {scheme.scheme!r}")


def init_params(cfg: GinConfig, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    weights = []
    for name, shape in cfg.weight_shapes():
        if name.endswith("bias"):
            weights.append(np.zeros(shape))
        elif len(shape) == 2:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            weights.append(rng.uniform(-limit, limit, size=shape))
        else:  # head weight vector: fan_out 1
            limit = np.sqrt(6.0 / (shape[0] + 1))
            weights.append(rng.uniform(-limit, limit, size=shape))
    return ModelParams(
        config=cfg, weights=tuple(weights), fingerprint=cfg.fingerprint()
    )


class GraphTensors:
    """Constant index arrays a graph contributes to the computation graph.

    src/dst list every edge in both directions (message u->v and v->u);
    eu/ev list each undirected edge once, for the losses.
    """

    def __init__(self, g: Graph):
        self.n = g.n
        if g.m:
            e = np.asarray(g.edges, dtype=np.int64)
            self.eu, self.ev = e[:, 0], e[:, 1]
            self.src = np.concatenate([self.eu, self.ev])
            self.dst = np.concatenate([self.ev, self.eu])
        else:
            self.eu = self.ev = np.zeros(0, dtype=np.int64)
            self.src = self.dst = np.zeros(0, dtype=np.int64)


def forward_tensor(
    param_tensors: List[ad.Tensor],
    cfg: GinConfig,
    gt: GraphTensors,
    feat: np.ndarray,
) -> ad.Tensor:
    """Soft assignment as a graph node: shape (n,), values in (0,1)."""
    h = ad.tensor(feat)
    idx = 0
    for _ in range(cfg.layers):
        agg = ad.scatter_add(ad.gather(h, gt.src), gt.dst, gt.n)
        if cfg.epsilon:
            z = ad.add(ad.mul(h, ad.tensor(1.0 + cfg.epsilon)), agg)
        else:
            z = ad.add(h, agg)
        for _ in range(cfg.mlp_depth):
            w, b = param_tensors[idx], param_tensors[idx + 1]
            idx += 2
            z = ad.relu(ad.add(ad.matmul(z, w), b))
        h = z
    head_w, head_b = param_tensors[idx], param_tensors[idx + 1]
    logits = ad.add(ad.matvec(h, head_w), head_b)
    return ad.sigmoid(logits)


def forward(params: ModelParams, g: Graph, feat: FeatureInit) -> SoftAssignment:
    """Deterministic soft assignment for one graph."""
    if params.fingerprint != params.config.fingerprint():
        raise ValueError("parameter fingerprint does not match architecture")
    out = forward_tensor(
        params.as_tensors(), params.config, GraphTensors(g), make_features(g, feat)
    )
    return SoftAssignment(values=out.data)
