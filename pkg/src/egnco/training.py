"""Training loops: ERM over the relaxed loss, meta training that optimizes
post-adaptation loss, and per-instance fine-tuning.

The meta update, per batch: for every instance compute the adapted
parameters theta_i = theta - alpha * grad(loss(theta; G_i)) with a plain
gradient step, then step theta against the gradient of the mean adapted
loss. In exact mode that gradient flows through the inner step (including
the Hessian-vector term); first-order mode detaches the inner gradient.
The inner step is always plain SGD; only the outer update may be adaptive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, Tensor, adam_step, detach, grad, sgd_step
from .gin import (
    FeatureInit,
    GinConfig,
    GraphTensors,
    ModelParams,
    default_config,
    forward_tensor,
    init_params,
    make_features,
)
from .graph import Graph
from .problems import ProblemSpec, discrete_objective, round_assignment

__all__ = [
    "TrainConfig",
    "TrainInstance",
    "TrainState",
    "instance_loss",
    "loss_tensor",
    "relaxed_loss_tensor",
    "erm_batch",
    "meta_batch",
    "train_egn",
    "train_meta_egn",
    "finetune_one_step",
    "finetune_k_steps",
]

DEFAULT_OUTER_LR = {"mc": 1e-3, "mvc": 1e-3, "mis": 1e-4}


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for both training loops.

    outer_lr=None resolves to the per-problem default (1e-3 for MC/MVC,
    1e-4 for MIS) at train time.
    """

    max_iters: int
    inner_lr: float = 5e-5
    outer_lr: Optional[float] = None
    batch_size: int = 32
    optimizer: str = "adam"  # or "sgd"
    meta_mode: str = "exact"  # or "first_order"
    eval_every: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.inner_lr <= 0:
            raise ValueError("inner_lr must be positive")
        if self.outer_lr is not None and self.outer_lr <= 0:
            raise ValueError("outer_lr must be positive")
        if self.batch_size < 1 or self.max_iters < 0:
            raise ValueError("batch_size >= 1 and max_iters >= 0 required")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.meta_mode not in ("exact", "first_order"):
            raise ValueError(f"unknown meta_mode {self.meta_mode!r}")

    def resolved_outer_lr(self, problem_kind: str) -> float:
        return self.outer_lr if self.outer_lr is not None else DEFAULT_OUTER_LR[problem_kind]


@dataclass(frozen=True)
class TrainInstance:
    """One training or validation graph.

    feature=None means a fresh random seed node is drawn every time the
    instance is visited (symmetry-breaking augmentation); a fixed scheme
    (greedy indicator, constant) is used as-is. reference, when known,
    feeds the validation approximation rate.
    """

    graph: Graph
    feature: Optional[FeatureInit] = None
    reference: Optional[float] = None


@dataclass
class HistoryRow:
    iteration: int
    train_loss_pre_adapt: float
    train_loss_post_adapt: float
    val_loss: Optional[float]
    val_apr: Optional[float]


@dataclass
class TrainState:
    """Final parameters plus the best-validation snapshot and history."""

    params: ModelParams
    best_params: ModelParams
    best_metric: float
    iteration: int
    history: List[HistoryRow] = field(default_factory=list)


def relaxed_loss_tensor(x: Tensor, gt: GraphTensors, spec: ProblemSpec) -> Tensor:
    """Penalty-relaxed loss of a soft-assignment tensor, on the tape."""
    if spec.kind == "mis":
        edge = ad.tsum(ad.mul(ad.gather(x, gt.eu), ad.gather(x, gt.ev)))
        return ad.add(ad.neg(ad.tsum(x)), ad.mul(ad.tensor(spec.beta), edge))
    if spec.kind == "mvc":
        ones = ad.tensor(np.ones(gt.n))
        inv = ad.sub(ones, x)
        miss = ad.tsum(ad.mul(ad.gather(inv, gt.eu), ad.gather(inv, gt.ev)))
        return ad.add(ad.tsum(x), ad.mul(ad.tensor(spec.beta), miss))
    # max clique: -(beta+1)*sum_E x_u x_v + (beta/2)*((sum x)^2 - sum x^2)
    edge = ad.tsum(ad.mul(ad.gather(x, gt.eu), ad.gather(x, gt.ev)))
    total = ad.tsum(x)
    sq = ad.tsum(ad.mul(x, x))
    pairs = ad.sub(ad.mul(total, total), sq)
    return ad.add(
        ad.mul(ad.tensor(-(spec.beta + 1.0)), edge),
        ad.mul(ad.tensor(0.5 * spec.beta), pairs),
    )


def loss_tensor(
    leaves: List[Tensor],
    cfg: GinConfig,
    gt: GraphTensors,
    feat: np.ndarray,
    spec: ProblemSpec,
) -> Tensor:
    """Relaxed loss of the network output, recorded on the tape."""
    return relaxed_loss_tensor(forward_tensor(leaves, cfg, gt, feat), gt, spec)


def instance_loss(
    params: ModelParams, g: Graph, feat: FeatureInit, spec: ProblemSpec
) -> Tuple[Tensor, List[Tensor]]:
    """(differentiable scalar loss, parameter leaves it depends on)."""
    leaves = params.as_tensors()
    loss = loss_tensor(
        leaves, params.config, GraphTensors(g), make_features(g, feat), spec
    )
    return loss, leaves


LossFn = Callable[[List[Tensor]], Tensor]


def erm_batch(leaves: List[Tensor], loss_fns: Sequence[LossFn]) -> Tuple[float, List[Tensor]]:
    """Mean batch loss and its gradient."""
    total = None
    for fn in loss_fns:
        l = fn(leaves)
        total = l if total is None else ad.add(total, l)
    mean = ad.mul(ad.tensor(1.0 / len(loss_fns)), total)
    return mean.item(), grad(mean, leaves)


def meta_batch(
    leaves: List[Tensor],
    loss_fns: Sequence[LossFn],
    alpha: float,
    mode: str = "exact",
) -> Tuple[float, float, List[Tensor]]:
    """Meta objective over one batch.

    Returns (mean pre-adaptation loss, mean post-adaptation loss, gradient
    of the post-adaptation mean w.r.t. the unadapted leaves).
    """
    pre_total = 0.0
    post_total = None
    alpha_t = ad.tensor(alpha)
    for fn in loss_fns:
        inner = fn(leaves)
        pre_total += inner.item()
        inner_grads = grad(inner, leaves)
        if mode == "first_order":
            inner_grads = [detach(gi) for gi in inner_grads]
        adapted = [
            ad.sub(p, ad.mul(alpha_t, gi)) for p, gi in zip(leaves, inner_grads)
        ]
        outer = fn(adapted)
        post_total = outer if post_total is None else ad.add(post_total, outer)
    mean_post = ad.mul(ad.tensor(1.0 / len(loss_fns)), post_total)
    return (
        pre_total / len(loss_fns),
        mean_post.item(),
        grad(mean_post, leaves),
    )


def _resolve_feature(
    inst: TrainInstance, rng: np.random.Generator
) -> FeatureInit:
    if inst.feature is not None:
        return inst.feature
    return FeatureInit.single_node_seed(int(rng.integers(inst.graph.n)))


def _validation_feature(inst: TrainInstance, index: int, seed: int) -> FeatureInit:
    if inst.feature is not None:
        return inst.feature
    rng = np.random.default_rng((seed, 9239, index))
    return FeatureInit.single_node_seed(int(rng.integers(inst.graph.n)))


def _validate(
    params: ModelParams,
    val: Sequence[TrainInstance],
    spec: ProblemSpec,
    seed: int,
    caches: Sequence[Tuple[GraphTensors, None]],
) -> Tuple[Optional[float], Optional[float]]:
    """(mean relaxed loss, mean ApR or None when references are missing)."""
    if not val:
        return None, None
    losses = []
    aprs = []
    have_all_refs = all(i.reference is not None and i.reference > 0 for i in val)
    for idx, inst in enumerate(val):
        feat_scheme = _validation_feature(inst, idx, seed)
        leaves = params.as_tensors()
        gt = caches[idx][0]
        feat = make_features(inst.graph, feat_scheme)
        x = forward_tensor(leaves, params.config, gt, feat)
        losses.append(relaxed_loss_tensor(x, gt, spec).item())
        if have_all_refs:
            sol = round_assignment(spec, inst.graph, x.data)
            value, feasible = discrete_objective(spec, inst.graph, sol)
            if not feasible:
                # score the trivial feasible solution instead: the empty set
                # for MC/MIS, the full vertex set for MVC
                value = 0 if spec.sense == "maximize" else inst.graph.n
            aprs.append(value / inst.reference)
    mean_loss = float(np.mean(losses))
    mean_apr = float(np.mean(aprs)) if have_all_refs else None
    return mean_loss, mean_apr


def _metric(spec: ProblemSpec, mean_loss, mean_apr) -> Optional[float]:
    """Snapshot metric, larger is better."""
    if mean_apr is not None:
        return mean_apr if spec.sense == "maximize" else -mean_apr
    if mean_loss is not None:
        return -mean_loss
    return None


def _make_loss_fn(
    cfg: GinConfig, gt: GraphTensors, feat: np.ndarray, spec: ProblemSpec
) -> LossFn:
    return lambda leaves: loss_tensor(leaves, cfg, gt, feat, spec)


def _run_training(
    instances: Sequence[TrainInstance],
    spec: ProblemSpec,
    cfg: TrainConfig,
    *,
    meta: bool,
    gin_config: Optional[GinConfig],
    init: Optional[ModelParams],
    val: Sequence[TrainInstance],
) -> TrainState:
    if not instances:
        raise ValueError("training needs at least one instance")
    model_cfg = gin_config or default_config(spec.kind)
    params = init if init is not None else init_params(model_cfg, seed=cfg.seed)
    if params.config != model_cfg:
        model_cfg = params.config
    rng = np.random.default_rng((cfg.seed, 4051))
    feat_rng = np.random.default_rng((cfg.seed, 6899))
    outer_lr = cfg.resolved_outer_lr(spec.kind)

    caches = [(GraphTensors(i.graph), None) for i in instances]
    val_caches = [(GraphTensors(i.graph), None) for i in val]
    opt_state = AdamState.init(params.as_tensors()) if cfg.optimizer == "adam" else None

    state = TrainState(
        params=params, best_params=params, best_metric=-math.inf, iteration=0
    )

    def checkpoint(iteration: int, pre: float, post: float) -> None:
        mean_loss, mean_apr = _validate(state.params, val, spec, cfg.seed, val_caches)
        metric = _metric(spec, mean_loss, mean_apr)
        if metric is not None and metric > state.best_metric:
            state.best_metric = metric
            state.best_params = state.params
        state.history.append(
            HistoryRow(iteration, pre, post, mean_loss, mean_apr)
        )

    n = len(instances)
    batch_size = min(cfg.batch_size, n)
    epoch_order: List[int] = []

    def next_batch_erm() -> List[int]:
        nonlocal epoch_order
        if len(epoch_order) < batch_size:
            epoch_order = list(rng.permutation(n))
        picked = epoch_order[:batch_size]
        epoch_order = epoch_order[batch_size:]
        return picked

    for iteration in range(cfg.max_iters):
        if meta:
            picked = list(rng.choice(n, size=batch_size, replace=False))
        else:
            picked = next_batch_erm()
        loss_fns = []
        for i in picked:
            inst = instances[i]
            feat = make_features(inst.graph, _resolve_feature(inst, feat_rng))
            loss_fns.append(_make_loss_fn(model_cfg, caches[i][0], feat, spec))
        leaves = state.params.as_tensors()
        if meta:
            pre, post, grads = meta_batch(leaves, loss_fns, cfg.inner_lr, cfg.meta_mode)
        else:
            pre, grads = erm_batch(leaves, loss_fns)
            post = pre
        if cfg.optimizer == "adam":
            opt_state, new_leaves = adam_step(opt_state, leaves, grads, outer_lr)
        else:
            new_leaves = sgd_step(leaves, grads, outer_lr)
        state.params = state.params.replace_weights([t.data for t in new_leaves])
        state.iteration = iteration + 1
        if (iteration + 1) % cfg.eval_every == 0 or iteration + 1 == cfg.max_iters:
            checkpoint(iteration + 1, pre, post)

    if not state.history:
        checkpoint(0, float("nan"), float("nan"))
    if state.best_metric == -math.inf:
        state.best_params = state.params
    return state


def train_egn(
    instances: Sequence[TrainInstance],
    spec: ProblemSpec,
    cfg: TrainConfig,
    *,
    gin_config: Optional[GinConfig] = None,
    init: Optional[ModelParams] = None,
    val: Sequence[TrainInstance] = (),
) -> TrainState:
    """Mini-batch training of the mean relaxed loss over all instances.

    Sweeps the shuffled dataset batch by batch; one iteration is one
    optimizer step. Deterministic in (data, cfg, seed).
    """
    return _run_training(
        instances, spec, cfg, meta=False, gin_config=gin_config, init=init, val=val
    )


def train_meta_egn(
    instances: Sequence[TrainInstance],
    spec: ProblemSpec,
    cfg: TrainConfig,
    *,
    gin_config: Optional[GinConfig] = None,
    init: Optional[ModelParams] = None,
    val: Sequence[TrainInstance] = (),
) -> TrainState:
    """Meta training: each iteration samples one batch and steps the outer
    parameters against the post-adaptation loss."""
    return _run_training(
        instances, spec, cfg, meta=True, gin_config=gin_config, init=init, val=val
    )


def finetune_one_step(
    params: ModelParams,
    g: Graph,
    feat: FeatureInit,
    spec: ProblemSpec,
    alpha: float = 5e-5,
) -> ModelParams:
    """One plain gradient step on a single instance; input params untouched."""
    loss, leaves = instance_loss(params, g, feat, spec)
    grads = grad(loss, leaves)
    stepped = sgd_step(leaves, grads, alpha)
    return params.replace_weights([t.data for t in stepped])


def finetune_k_steps(
    params: ModelParams,
    g: Graph,
    feat: FeatureInit,
    spec: ProblemSpec,
    alpha: float = 5e-5,
    k: int = 1,
) -> ModelParams:
    """k repeated plain gradient steps on one instance."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = params
    for _ in range(k):
        out = finetune_one_step(out, g, feat, spec, alpha)
    return out
