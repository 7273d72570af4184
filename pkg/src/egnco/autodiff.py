"""Minimal reverse-mode automatic differentiation on dense float64 arrays.

The primitive set is just large enough for a GIN forward pass and the
penalty losses: elementwise add/mul, matrix products, edge gather/scatter,
relu, sigmoid, and full reduction. Every backward rule builds its result
out of these same primitives, so the graph produced by ``grad`` is itself
differentiable — second-order gradients (gradient of a function of a
gradient) come out of repeated ``grad`` calls with no extra machinery.

No general broadcasting: shapes must match except for the documented
scalar and row-vector cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Tensor",
    "tensor",
    "add",
    "sub",
    "neg",
    "mul",
    "matmul",
    "matvec",
    "outer",
    "transpose",
    "gather",
    "scatter_add",
    "relu",
    "sigmoid",
    "tsum",
    "detach",
    "grad",
    "grad_of_grad",
    "sgd_step",
    "AdamState",
    "adam_step",
]


class Tensor:
    """A node in the computation graph: a float64 array plus provenance."""

    __slots__ = ("data", "parents", "vjp")

    def __init__(
        self,
        data,
        parents: Tuple["Tensor", ...] = (),
        vjp: Optional[Callable[["Tensor"], Tuple[Optional["Tensor"], ...]]] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    # operator sugar; python numbers become constants
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, leaf={self.vjp is None})"


def tensor(data) -> Tensor:
    """A leaf tensor (graph input)."""
    return Tensor(data)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _reduce_to_shape(t: Tensor, shape: Tuple[int, ...]) -> Tensor:
    """Sum a broadcast adjoint back down to the parent's shape."""
    if t.shape == shape:
        return t
    if shape == ():
        return tsum(t)
    if len(shape) == 1 and len(t.shape) == 2 and t.shape[1] == shape[0]:
        return _colsum(t)
    raise ValueError(f"cannot reduce adjoint {t.shape} to {shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum. Allowed shape pairs: equal, (n,k)+(k,), any+scalar."""
    out = a.data + b.data
    _check_broadcast(a.shape, b.shape, out.shape)

    def vjp(adj: Tensor):
        return _reduce_to_shape(adj, a.shape), _reduce_to_shape(adj, b.shape)

    return Tensor(out, (a, b), vjp)


def _check_broadcast(sa, sb, so):
    ok = (
        sa == sb
        or sa == ()
        or sb == ()
        or (len(sa) == 2 and sb == sa[1:])
        or (len(sb) == 2 and sa == sb[1:])
    )
    if not ok:
        raise ValueError(f"unsupported shape combination {sa} and {sb}")
    del so


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, (a,), lambda adj: (neg(adj),))


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, neg(b))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; equal shapes or scalar-with-anything."""
    out = a.data * b.data
    _check_broadcast(a.shape, b.shape, out.shape)

    def vjp(adj: Tensor):
        return (
            _reduce_to_shape(mul(adj, b), a.shape),
            _reduce_to_shape(mul(adj, a), b.shape),
        )

    return Tensor(out, (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(n,k) @ (k,m) -> (n,m)."""
    if len(a.shape) != 2 or len(b.shape) != 2:
        raise ValueError("matmul expects two matrices")

    def vjp(adj: Tensor):
        return matmul(adj, transpose(b)), matmul(transpose(a), adj)

    return Tensor(a.data @ b.data, (a, b), vjp)


def matvec(a: Tensor, v: Tensor) -> Tensor:
    """(n,k) @ (k,) -> (n,)."""
    if len(a.shape) != 2 or len(v.shape) != 1:
        raise ValueError("matvec expects a matrix and a vector")

    def vjp(adj: Tensor):
        return outer(adj, v), matvec(transpose(a), adj)

    return Tensor(a.data @ v.data, (a, v), vjp)


def outer(u: Tensor, v: Tensor) -> Tensor:
    """(n,) outer (k,) -> (n,k)."""

    def vjp(adj: Tensor):
        return matvec(adj, v), matvec(transpose(adj), u)

    return Tensor(np.outer(u.data, v.data), (u, v), vjp)


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.data.T.copy(), (a,), lambda adj: (transpose(adj),))


def _colsum(a: Tensor) -> Tensor:
    """(n,k) -> (k,): column sums. Adjoint broadcasts back over rows."""
    n = a.shape[0]

    def vjp(adj: Tensor):
        return (_broadcast_rows(adj, n),)

    return Tensor(a.data.sum(axis=0), (a,), vjp)


def _broadcast_rows(v: Tensor, n: int) -> Tensor:
    """(k,) -> (n,k) by row repetition."""

    def vjp(adj: Tensor):
        return (_colsum(adj),)

    return Tensor(np.broadcast_to(v.data, (n, v.shape[0])).copy(), (v,), vjp)


def gather(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows (2-d) or entries (1-d) of x at integer indices."""
    idx = np.asarray(idx, dtype=np.int64)
    size = x.shape[0]

    def vjp(adj: Tensor):
        return (scatter_add(adj, idx, size),)

    return Tensor(x.data[idx], (x,), vjp)


def _segment_sum(data: np.ndarray, idx: np.ndarray, size: int) -> np.ndarray:
    if data.ndim == 1:
        return np.bincount(idx, weights=data, minlength=size)
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    sorted_rows = data[order]
    present, starts = np.unique(sorted_idx, return_index=True)
    out = np.zeros((size,) + data.shape[1:], dtype=np.float64)
    if present.size:
        out[present] = np.add.reduceat(sorted_rows, starts, axis=0)
    return out


def scatter_add(x: Tensor, idx: np.ndarray, size: int) -> Tensor:
    """out[i] = sum of x rows whose index equals i; out has `size` rows."""
    idx = np.asarray(idx, dtype=np.int64)

    def vjp(adj: Tensor):
        return (gather(adj, idx),)

    return Tensor(_segment_sum(x.data, idx, size), (x,), vjp)


def relu(x: Tensor) -> Tensor:
    mask = Tensor((x.data > 0).astype(np.float64))

    def vjp(adj: Tensor):
        return (mul(adj, mask),)

    return Tensor(np.maximum(x.data, 0.0), (x,), vjp)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out_data = np.empty_like(d)
    pos = d >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ez = np.exp(d[~pos])
    out_data[~pos] = ez / (1.0 + ez)
    out = Tensor(out_data, (x,), None)

    def vjp(adj: Tensor):
        # derivative written in terms of the output node, so it is itself
        # differentiable for the second-order pass
        one = Tensor(np.ones_like(out_data))
        return (mul(adj, mul(out, sub(one, out))),)

    out.vjp = vjp
    return out


def tsum(x: Tensor) -> Tensor:
    """Sum every element to a scalar."""
    shape = x.shape

    def vjp(adj: Tensor):
        ones = Tensor(np.ones(shape))
        return (mul(adj, ones) if shape else adj,)

    return Tensor(x.data.sum(), (x,), vjp)


def detach(x: Tensor) -> Tensor:
    """Copy of x cut out of the graph (gradient stops here)."""
    return Tensor(x.data.copy())


def _topo_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    seen = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def grad(output: Tensor, wrt: Sequence[Tensor]) -> List[Tensor]:
    """Reverse-mode gradients of a scalar output.

    Returns one tensor per entry of `wrt`; parameters the output does not
    depend on get zero tensors of matching shape. The returned tensors are
    graph nodes, so they can be differentiated again.
    """
    if output.shape != ():
        raise ValueError(f"grad needs a scalar output, got shape {output.shape}")
    adjoints = {id(output): Tensor(np.float64(1.0))}
    for node in reversed(_topo_order(output)):
        adj = adjoints.get(id(node))
        if adj is None or node.vjp is None:
            continue
        for parent, padj in zip(node.parents, node.vjp(adj)):
            if padj is None:
                continue
            prev = adjoints.get(id(parent))
            adjoints[id(parent)] = padj if prev is None else add(prev, padj)
    out = []
    for p in wrt:
        adj = adjoints.get(id(p))
        out.append(Tensor(np.zeros(p.shape)) if adj is None else adj)
    return out


def grad_of_grad(meta_scalar: Tensor, wrt: Sequence[Tensor]) -> List[Tensor]:
    """Gradient of a scalar that was built from earlier ``grad`` outputs.

    ``grad`` already returns differentiable nodes, so the second-order pass
    is the same reverse sweep applied to the enlarged graph; this alias
    exists to mark call sites that rely on the Hessian-vector term.
    """
    return grad(meta_scalar, wrt)


def sgd_step(params: Sequence[Tensor], grads: Sequence[Tensor], lr: float) -> List[Tensor]:
    """New leaf tensors theta - lr * g; inputs are untouched."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    out = []
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        out.append(Tensor(p.data - lr * g.data))
    return out


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0

    @classmethod
    def init(cls, params: Sequence[Tensor]) -> "AdamState":
        return cls(
            m=[np.zeros(p.shape) for p in params],
            v=[np.zeros(p.shape) for p in params],
            t=0,
        )


def adam_step(
    state: AdamState,
    params: Sequence[Tensor],
    grads: Sequence[Tensor],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[AdamState, List[Tensor]]:
    """One bias-corrected adaptive moment update; functional in params."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    t = state.t + 1
    new_m, new_v, out = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
        m2 = beta1 * m + (1.0 - beta1) * g.data
        v2 = beta2 * v + (1.0 - beta2) * g.data * g.data
        mhat = m2 / (1.0 - beta1**t)
        vhat = v2 / (1.0 - beta2**t)
        out.append(Tensor(p.data - lr * mhat / (np.sqrt(vhat) + eps)))
        new_m.append(m2)
        new_v.append(v2)
    return AdamState(m=new_m, v=new_v, t=t), out
