"""Seeded instance generators: RB-model graphs, random regular graphs, G(n,p).

Every generator is a pure function of its parameters and seed: the same
inputs always produce bit-identical edge lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, from_edge_list

__all__ = ["RbParams", "RrgParams", "gen_rb", "gen_rrg", "gen_er"]

# RB sizing presets: (groups, group_size) whose products give the named node counts.
RB_PRESETS = {
    "rb200": (20, 10),
    "rb500": (25, 20),
    "rb1000": (40, 25),
}


@dataclass(frozen=True)
class RbParams:
    """RB-model parameters: `groups` cliques of `group_size` nodes each,
    connected by random cross-group edges whose density is driven by rho."""

    groups: int
    group_size: int
    rho: float
    seed: int = 0

    def __post_init__(self):
        if self.groups < 2:
            raise ValueError(f"groups must be >= 2, got {self.groups}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")


@dataclass(frozen=True)
class RrgParams:
    """Random regular graph parameters: n nodes, every node of degree d."""

    n: int
    d: int
    seed: int = 0

    def __post_init__(self):
        if self.d >= self.n:
            raise ValueError(f"degree {self.d} must be < node count {self.n}")
        if self.d < 0 or self.n <= 0:
            raise ValueError("n must be positive and d nonnegative")
        if (self.n * self.d) % 2 != 0:
            raise ValueError(f"n*d must be even, got n={self.n}, d={self.d}")


def gen_rb(p: RbParams) -> Graph:
    """Generate one RB-model instance.

    Nodes are partitioned into `groups` cliques of `group_size` nodes.
    With a = ln(group_size)/ln(groups) and r = -a/ln(1-rho), the generator
    performs round(r * groups * ln(groups)) iterations; each picks two
    distinct groups and inserts round(rho * group_size^2) distinct random
    cross-group pairs. Smaller rho gives tighter, harder instances. Any
    independent set contains at most one node per clique, so `groups` is a
    valid upper bound for independent set size.
    """
    rng = np.random.default_rng(p.seed)
    k = p.group_size
    edges = []
    for gidx in range(p.groups):
        base = gidx * k
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((base + i, base + j))

    a = math.log(k) / math.log(p.groups)
    r = -a / math.log(1.0 - p.rho)
    iterations = int(round(r * p.groups * math.log(p.groups)))
    pairs_per_iter = min(int(round(p.rho * k * k)), k * k)
    for _ in range(iterations):
        ga = int(rng.integers(p.groups))
        gb = int(rng.integers(p.groups - 1))
        if gb >= ga:
            gb += 1
        flat = rng.choice(k * k, size=pairs_per_iter, replace=False)
        for f in flat:
            i, j = divmod(int(f), k)
            edges.append((ga * k + i, gb * k + j))
    return from_edge_list(p.groups * k, edges)


def _pairing_attempt(rng: np.random.Generator, n: int, d: int):
    """One configuration-model pairing pass.

    Stubs are shuffled and paired; pairs that would create a self-loop or a
    duplicate edge put their stubs back for the next pass. Returns None when
    the leftover stubs provably cannot be paired legally (dead end).
    """
    edges = set()
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        retry = []
        for i in range(0, stubs.size, 2):
            u, v = int(stubs[i]), int(stubs[i + 1])
            if u > v:
                u, v = v, u
            if u == v or (u, v) in edges:
                retry.append(stubs[i])
                retry.append(stubs[i + 1])
            else:
                edges.add((u, v))
        if len(retry) == stubs.size:
            nodes = sorted(set(int(s) for s in retry))
            legal = any(
                (a, b) not in edges
                for ai, a in enumerate(nodes)
                for b in nodes[ai + 1 :]
            )
            if not legal:
                return None
        stubs = np.array(retry, dtype=np.int64)
    return edges


def gen_rrg(p: RrgParams, max_restarts: int = 200) -> Graph:
    """Generate a simple d-regular graph via configuration-model pairing.

    Not an exactly uniform sampler; dead-end pairings are restarted, up to
    `max_restarts` times.
    """
    rng = np.random.default_rng(p.seed)
    if p.d == 0:
        return from_edge_list(p.n, [])
    for _ in range(max_restarts):
        edges = _pairing_attempt(rng, p.n, p.d)
        if edges is not None:
            return from_edge_list(p.n, sorted(edges))
    raise RuntimeError(
        f"regular graph generation failed after {max_restarts} restarts "
        f"(n={p.n}, d={p.d})"
    )


def gen_er(n: int, p: float, seed: int = 0) -> Graph:
    """Erdos-Renyi G(n, p): each unordered pair is an edge with probability p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if not pairs:
        return from_edge_list(n, [])
    mask = rng.random(len(pairs)) < p
    return from_edge_list(n, [e for e, keep in zip(pairs, mask) if keep])
