"""The three node-subset problems (max clique, min vertex cover, max
independent set) as data: discrete objectives, penalty-relaxed losses,
sequential rounding, feasibility predicates, and a brute-force oracle.

Relaxed losses (soft assignment x in [0,1]^n, penalty beta > 0):

    MIS:  -sum_i x_i                + beta * sum_{(i,j) in E} x_i x_j
    MVC:   sum_i x_i                + beta * sum_{(i,j) in E} (1-x_i)(1-x_j)
    MC :  -(beta+1) * sum_{(i,j) in E} x_i x_j + (beta/2) * sum_{i != j} x_i x_j

Each loss splits as f_r + beta * g_r with g_r >= 0 vanishing exactly on
feasible discrete points, and is affine in every single coordinate, which
makes the sequential rounding below non-increasing and yields the
feasibility certificate: relaxed loss < beta implies the rounded solution
is feasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .graph import Graph, complement, is_clique, is_independent_set, is_vertex_cover

__all__ = [
    "PROBLEM_KINDS",
    "DEFAULT_BETA",
    "ProblemSpec",
    "problem",
    "SoftAssignment",
    "DiscreteSolution",
    "relaxed_loss",
    "discrete_objective",
    "penalized_value",
    "round_assignment",
    "RoundingState",
    "incremental_round_delta",
    "exact_optimum",
    "GuaranteeReport",
    "guarantee_check",
]

PROBLEM_KINDS = ("mc", "mvc", "mis")

# Penalty defaults: beta must exceed the per-edge gain so an infeasible pair
# is never worth its penalty. Overridable per run.
DEFAULT_BETA = {"mis": 2.0, "mvc": 5.0, "mc": 2.0}

_SENSE = {"mc": "maximize", "mvc": "minimize", "mis": "maximize"}


@dataclass(frozen=True)
class ProblemSpec:
    """One problem: kind, penalty coefficient, and objective sense."""

    kind: str
    beta: float
    sense: str

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind: {self.kind!r}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.sense != _SENSE[self.kind]:
            raise ValueError(f"{self.kind} has sense {_SENSE[self.kind]!r}")


def problem(kind: str, beta: Optional[float] = None) -> ProblemSpec:
    """ProblemSpec factory with the default penalty for `kind`."""
    kind = kind.lower()
    if kind not in PROBLEM_KINDS:
        raise ValueError(f"unknown problem kind: {kind!r}")
    return ProblemSpec(
        kind=kind,
        beta=DEFAULT_BETA[kind] if beta is None else float(beta),
        sense=_SENSE[kind],
    )


@dataclass(frozen=True)
class SoftAssignment:
    """Per-node values in [0, 1], aligned to graph node ids."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("soft assignment must be one-dimensional")
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise ValueError("soft assignment entries must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DiscreteSolution:
    """Binary per-node assignment plus the selected node set."""

    values: np.ndarray
    selected: Tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1 or not np.isin(vals, (0, 1)).all():
            raise ValueError("discrete solution entries must be 0 or 1")
        vals = vals.astype(np.int8)
        object.__setattr__(self, "values", vals)
        sel = tuple(int(i) for i in np.flatnonzero(vals))
        if self.selected is not None and tuple(self.selected) != sel:
            raise ValueError("selected set inconsistent with values")
        object.__setattr__(self, "selected", sel)

    @classmethod
    def from_selected(cls, n: int, nodes: Iterable[int]) -> "DiscreteSolution":
        vals = np.zeros(n, dtype=np.int8)
        for v in nodes:
            vals[v] = 1
        return cls(values=vals)

    @property
    def size(self) -> int:
        return len(self.selected)


def _soft_values(g: Graph, x) -> np.ndarray:
    vals = x.values if isinstance(x, SoftAssignment) else np.asarray(x, dtype=np.float64)
    if vals.shape != (g.n,):
        raise ValueError(f"assignment length {vals.shape} != node count {g.n}")
    return np.asarray(vals, dtype=np.float64)


def _edge_arrays(g: Graph) -> Tuple[np.ndarray, np.ndarray]:
    if g.m == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    e = np.asarray(g.edges, dtype=np.int64)
    return e[:, 0], e[:, 1]


def relaxed_loss(spec: ProblemSpec, g: Graph, x) -> float:
    """Penalty-relaxed loss f_r + beta*g_r at a soft assignment.

    The MC sum over ordered pairs i != j is evaluated through the identity
    sum_{i != j} x_i x_j = (sum_i x_i)^2 - sum_i x_i^2, keeping the cost
    O(n + m).
    """
    vals = _soft_values(g, x)
    eu, ev = _edge_arrays(g)
    edge_prod = float(np.dot(vals[eu], vals[ev])) if g.m else 0.0
    if spec.kind == "mis":
        return float(-vals.sum() + spec.beta * edge_prod)
    if spec.kind == "mvc":
        miss = float(np.dot(1.0 - vals[eu], 1.0 - vals[ev])) if g.m else 0.0
        return float(vals.sum() + spec.beta * miss)
    total = float(vals.sum())
    ordered_pairs = total * total - float(np.dot(vals, vals))
    return float(-(spec.beta + 1.0) * edge_prod + 0.5 * spec.beta * ordered_pairs)


def discrete_objective(spec: ProblemSpec, g: Graph, sol: DiscreteSolution) -> Tuple[int, bool]:
    """(selected-node count, feasibility) of a binary solution."""
    if sol.values.shape != (g.n,):
        raise ValueError("solution length does not match graph")
    sel = set(sol.selected)
    if spec.kind == "mc":
        feasible = is_clique(g, sel)
    elif spec.kind == "mvc":
        feasible = is_vertex_cover(g, sel)
    else:
        feasible = is_independent_set(g, sel)
    return len(sel), feasible


def _violations(spec: ProblemSpec, g: Graph, sel: set) -> int:
    """Constraint count g(X): 0 exactly on feasible points."""
    if spec.kind == "mis":
        return sum(1 for u, v in g.edges if u in sel and v in sel)
    if spec.kind == "mvc":
        return sum(1 for u, v in g.edges if u not in sel and v not in sel)
    inside = sum(1 for u, v in g.edges if u in sel and v in sel)
    k = len(sel)
    return k * (k - 1) // 2 - inside


def penalized_value(spec: ProblemSpec, g: Graph, sol: DiscreteSolution) -> float:
    """f(X) + beta*g(X) in minimization form; equals relaxed_loss at X."""
    return relaxed_loss(spec, g, sol.values.astype(np.float64))


class RoundingState:
    """Incremental bookkeeping for sequential rounding.

    Tracks, for the current (partly discrete) assignment: per-node neighbor
    sums, the total and squared-total needed by the MC loss, and the running
    loss value, so fixing one entry costs O(deg(i)).
    """

    def __init__(self, spec: ProblemSpec, g: Graph, x):
        vals = _soft_values(g, x).copy()
        self.spec = spec
        self.graph = g
        self.x = vals
        self.neighbor_sum = np.zeros(g.n, dtype=np.float64)
        for u, v in g.edges:
            self.neighbor_sum[u] += vals[v]
            self.neighbor_sum[v] += vals[u]
        self.total = float(vals.sum())
        self.loss = relaxed_loss(spec, g, vals)

    def _linear_coeff(self, i: int) -> float:
        """d(loss)/d(x_i): the loss is affine in each single coordinate."""
        spec = self.spec
        s_i = self.neighbor_sum[i]
        if spec.kind == "mis":
            return -1.0 + spec.beta * s_i
        if spec.kind == "mvc":
            deg = self.graph.degrees[i]
            return 1.0 - spec.beta * (deg - s_i)
        others = self.total - self.x[i]
        return -(spec.beta + 1.0) * s_i + spec.beta * others

    def candidate_losses(self, i: int) -> Tuple[float, float]:
        """Full-loss values if x_i were fixed to 0 and to 1."""
        coeff = self._linear_coeff(i)
        cur = self.x[i]
        return self.loss - cur * coeff, self.loss + (1.0 - cur) * coeff

    def fix(self, i: int, value: int) -> None:
        coeff = self._linear_coeff(i)
        delta = float(value) - self.x[i]
        self.loss += delta * coeff
        self.total += delta
        for j in self.graph.adjacency[i]:
            self.neighbor_sum[j] += delta
        self.x[i] = float(value)


def incremental_round_delta(
    spec: ProblemSpec, g: Graph, state: RoundingState, i: int
) -> Tuple[float, float]:
    """(loss if x_i=0, loss if x_i=1) under the state's current assignment."""
    if state.spec is not spec and state.spec != spec:
        raise ValueError("state was built for a different problem spec")
    return state.candidate_losses(i)


def round_assignment(
    spec: ProblemSpec,
    g: Graph,
    x,
    order: Optional[Sequence[int]] = None,
) -> DiscreteSolution:
    """Sequentially round a soft assignment to binary.

    Entries are fixed one at a time; entry i takes the binary value whose
    full relaxed loss (earlier entries already discrete, later ones still
    soft) is smaller. Ties go to 1 for maximize-sense problems (MC, MIS)
    and to 0 for minimize-sense (MVC). Default order: descending soft value,
    ties by ascending node index. The loss never increases at any step.
    """
    vals = _soft_values(g, x)
    if order is None:
        order = sorted(range(g.n), key=lambda i: (-vals[i], i))
    else:
        order = [int(i) for i in order]
        if sorted(order) != list(range(g.n)):
            raise ValueError("order must be a permutation of all nodes")
    prefer_one = spec.sense == "maximize"
    state = RoundingState(spec, g, vals)
    for i in order:
        loss0, loss1 = state.candidate_losses(i)
        if loss1 < loss0 or (loss1 == loss0 and prefer_one):
            state.fix(i, 1)
        else:
            state.fix(i, 0)
    return DiscreteSolution(values=state.x.astype(np.int8))


def _max_independent_set_bits(adj_bits: Sequence[int], n: int) -> int:
    """Exact maximum independent set on <= 26 nodes, as a bitmask.

    Branch and bound: branch on the highest-degree remaining node, include
    first, prune when remaining nodes cannot beat the incumbent.
    """
    best_mask = 0
    best_size = -1

    def rec(mask: int, chosen: int, size: int) -> None:
        nonlocal best_mask, best_size
        if size + bin(mask).count("1") <= best_size:
            return
        if mask == 0:
            if size > best_size:
                best_size = size
                best_mask = chosen
            return
        pick = -1
        pick_deg = -1
        mm = mask
        while mm:
            v = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            deg = bin(adj_bits[v] & mask).count("1")
            if deg > pick_deg:
                pick_deg = deg
                pick = v
        vbit = 1 << pick
        rec(mask & ~(vbit | adj_bits[pick]), chosen | vbit, size + 1)
        rec(mask & ~vbit, chosen, size)

    rec((1 << n) - 1, 0, 0)
    return best_mask


def exact_optimum(spec: ProblemSpec, g: Graph) -> Tuple[int, DiscreteSolution]:
    """Provably optimal feasible solution via exhaustive search (n <= 26).

    MVC uses cover = V minus a maximum independent set; MC solves MIS on the
    complement graph.
    """
    if g.n > 26:
        raise ValueError(f"exact search capped at 26 nodes, got {g.n}")
    adj_bits = [0] * g.n
    base = g if spec.kind != "mc" else complement(g)
    for u, v in base.edges:
        adj_bits[u] |= 1 << v
        adj_bits[v] |= 1 << u
    mis_mask = _max_independent_set_bits(adj_bits, g.n)
    mis_nodes = {i for i in range(g.n) if (mis_mask >> i) & 1}
    if spec.kind == "mvc":
        nodes = [i for i in range(g.n) if i not in mis_nodes]
    else:
        nodes = sorted(mis_nodes)
    witness = DiscreteSolution.from_selected(g.n, nodes)
    return len(nodes), witness


@dataclass(frozen=True)
class GuaranteeReport:
    """Post-rounding certificate checks against the input relaxed loss."""

    penalized: float
    loss_value: float
    bound_holds: bool            # f(X) + beta*g(X) <= loss_value + 1e-6
    certificate_applies: bool    # loss_value < beta
    feasible: bool
    feasibility_holds: bool      # certificate_applies implies feasible

    @property
    def ok(self) -> bool:
        return self.bound_holds and self.feasibility_holds


def guarantee_check(
    spec: ProblemSpec, g: Graph, loss_value: float, sol: DiscreteSolution
) -> GuaranteeReport:
    """Check the quality and feasibility guarantees of a rounded solution."""
    pen = penalized_value(spec, g, sol)
    _, feasible = discrete_objective(spec, g, sol)
    applies = loss_value < spec.beta
    return GuaranteeReport(
        penalized=pen,
        loss_value=loss_value,
        bound_holds=pen <= loss_value + 1e-6,
        certificate_applies=applies,
        feasible=feasible,
        feasibility_holds=(not applies) or feasible,
    )
