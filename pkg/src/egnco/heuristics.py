"""Classical greedy baselines: random and degree-based greedy for
independent sets, max-degree greedy for vertex cover, and the
complement-graph greedy for cliques.

All of them peel nodes with an alive-mask over the immutable graph. The
degree-driven variants keep a lazy (degree, node) min-heap: stale entries
are skipped on pop, so the total work stays near O(n + m) with a log
factor, and ties always resolve to the lowest node index.
"""

from __future__ import annotations

import heapq
from typing import Optional

import numpy as np

from .graph import Graph, complement
from .problems import DiscreteSolution

__all__ = ["rga_mis", "dga_mis", "greedy_mvc", "toenshoff_greedy_mc"]


def rga_mis(g: Graph, seed: int = 0) -> DiscreteSolution:
    """Random greedy maximal independent set.

    Repeatedly pick a uniformly random alive node, select it, and kill it
    together with its neighbors. Deterministic in the seed.
    """
    rng = np.random.default_rng(seed)
    alive = np.ones(g.n, dtype=bool)
    pool = list(range(g.n))          # alive nodes, swap-removed in O(1)
    pos = list(range(g.n))
    selected = []

    def remove(v: int) -> None:
        alive[v] = False
        i = pos[v]
        last = pool[-1]
        pool[i] = last
        pos[last] = i
        pool.pop()

    while pool:
        v = pool[int(rng.integers(len(pool)))]
        selected.append(v)
        remove(v)
        for u in g.adjacency[v]:
            if alive[u]:
                remove(u)
    return DiscreteSolution.from_selected(g.n, selected)


def dga_mis(g: Graph) -> DiscreteSolution:
    """Degree-based greedy maximal independent set.

    Always select the alive node of minimum current degree (ties to the
    lowest index), then kill it and its neighbors.
    """
    deg = list(g.degrees)
    alive = [True] * g.n
    heap = [(deg[v], v) for v in range(g.n)]
    heapq.heapify(heap)
    selected = []

    def kill(v: int) -> None:
        alive[v] = False
        for u in g.adjacency[v]:
            if alive[u]:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))

    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != deg[v]:
            continue
        selected.append(v)
        kill(v)
        for u in list(g.adjacency[v]):
            if alive[u]:
                kill(u)
    return DiscreteSolution.from_selected(g.n, selected)


def greedy_mvc(g: Graph) -> DiscreteSolution:
    """Max-degree greedy vertex cover.

    Add the node with the most uncovered incident edges (ties to the lowest
    index) until every edge is covered.
    """
    deg = list(g.degrees)
    in_cover = [False] * g.n
    remaining = g.m
    heap = [(-deg[v], v) for v in range(g.n) if deg[v] > 0]
    heapq.heapify(heap)
    while remaining > 0:
        d, v = heapq.heappop(heap)
        if in_cover[v] or -d != deg[v] or deg[v] == 0:
            continue
        in_cover[v] = True
        remaining -= deg[v]
        for u in g.adjacency[v]:
            if not in_cover[u] and deg[u] > 0:
                deg[u] -= 1
                heapq.heappush(heap, (-deg[u], u))
        deg[v] = 0
    return DiscreteSolution.from_selected(g.n, [v for v in range(g.n) if in_cover[v]])


def toenshoff_greedy_mc(g: Graph) -> DiscreteSolution:
    """Greedy max clique: degree greedy independent set on the complement."""
    return DiscreteSolution(values=dga_mis(complement(g)).values)
