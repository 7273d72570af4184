"""Immutable simple undirected graphs with dense 0..n-1 node ids.

All algorithms in this package share this one representation. Graphs are
frozen after construction; procedures that peel nodes away keep an explicit
alive-mask instead of mutating the graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

__all__ = [
    "Graph",
    "from_edge_list",
    "complement",
    "induced_subgraph",
    "is_clique",
    "is_independent_set",
    "is_vertex_cover",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: no self-loops, no duplicate edges.

    edges are (u, v) pairs with u < v, sorted lexicographically; adjacency
    lists are sorted. Instances are safe to share across threads.
    """

    n: int
    edges: Tuple[Tuple[int, int], ...]
    adjacency: Tuple[Tuple[int, ...], ...]
    degrees: Tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self._edge_set()

    def _edge_set(self) -> frozenset:
        # cached on first use; object.__setattr__ sidesteps frozen
        cached = self.__dict__.get("_edges_cached")
        if cached is None:
            cached = frozenset(self.edges)
            object.__setattr__(self, "_edges_cached", cached)
        return cached

    def __hash__(self) -> int:
        return hash((self.n, self.edges))


def from_edge_list(n: int, pairs: Iterable[Tuple[int, int]]) -> Graph:
    """Build a normalized Graph from possibly messy edge pairs.

    Self-loops are dropped, duplicates merged, pairs reordered to u < v.
    Raises ValueError for node ids outside 0..n-1.
    """
    if n < 0:
        raise ValueError(f"node count must be nonnegative, got {n}")
    seen = set()
    for u, v in pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"node id out of range: edge ({u}, {v}) with n={n}")
        if u == v:
            continue
        if u > v:
            u, v = v, u
        seen.add((u, v))
    edges = tuple(sorted(seen))
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    adjacency = tuple(tuple(sorted(a)) for a in adj)
    degrees = tuple(len(a) for a in adjacency)
    return Graph(n=n, edges=edges, adjacency=adjacency, degrees=degrees)


def complement(g: Graph) -> Graph:
    """Graph on the same nodes whose edges are exactly the non-edges of g."""
    present = g._edge_set()
    edges = [
        (u, v)
        for u in range(g.n)
        for v in range(u + 1, g.n)
        if (u, v) not in present
    ]
    return from_edge_list(g.n, edges)


def induced_subgraph(g: Graph, keep: Iterable[int]) -> Tuple[Graph, dict]:
    """Subgraph induced by `keep`, relabeled to 0..|keep|-1.

    Returns (subgraph, relabel) where relabel maps old node id -> new id.
    """
    keep_sorted = sorted(set(keep))
    for v in keep_sorted:
        if not (0 <= v < g.n):
            raise ValueError(f"node id out of range: {v}")
    relabel = {old: new for new, old in enumerate(keep_sorted)}
    edges = [
        (relabel[u], relabel[v])
        for u, v in g.edges
        if u in relabel and v in relabel
    ]
    return from_edge_list(len(keep_sorted), edges), relabel


def _check_subset(g: Graph, s: Iterable[int]) -> set:
    nodes = set(s)
    for v in nodes:
        if not (0 <= v < g.n):
            raise ValueError(f"node id out of range: {v}")
    return nodes


def is_clique(g: Graph, s: Iterable[int]) -> bool:
    """True iff every pair of distinct nodes in s is adjacent."""
    nodes = sorted(_check_subset(g, s))
    present = g._edge_set()
    return all(
        (nodes[i], nodes[j]) in present
        for i in range(len(nodes))
        for j in range(i + 1, len(nodes))
    )


def is_independent_set(g: Graph, s: Iterable[int]) -> bool:
    """True iff no edge of g has both endpoints in s."""
    nodes = _check_subset(g, s)
    return not any(u in nodes and v in nodes for u, v in g.edges)


def is_vertex_cover(g: Graph, s: Iterable[int]) -> bool:
    """True iff every edge of g has at least one endpoint in s."""
    nodes = _check_subset(g, s)
    return all(u in nodes or v in nodes for u, v in g.edges)
