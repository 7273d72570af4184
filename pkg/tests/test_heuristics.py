import numpy as np
import pytest

from egnco.generators import RrgParams, gen_er, gen_rrg
from egnco.graph import from_edge_list, is_clique, is_independent_set, is_vertex_cover
from egnco.heuristics import dga_mis, greedy_mvc, rga_mis, toenshoff_greedy_mc
from egnco.problems import exact_optimum, problem


def _maximal_independent(g, selected):
    sel = set(selected)
    if not is_independent_set(g, sel):
        return False
    for v in range(g.n):
        if v in sel:
            continue
        if not any(u in sel for u in g.adjacency[v]):
            return False
    return True


def test_rga_empty_graph_selects_all():
    g = from_edge_list(5, [])
    assert rga_mis(g, seed=0).selected == (0, 1, 2, 3, 4)


def test_rga_clique_selects_one():
    k4 = from_edge_list(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert len(rga_mis(k4, seed=3).selected) == 1


def test_rga_always_maximal():
    for seed in range(25):
        g = gen_er(20, 0.25, seed=seed)
        sol = rga_mis(g, seed=seed * 7)
        assert _maximal_independent(g, sol.selected)


def test_rga_deterministic_in_seed():
    g = gen_er(30, 0.2, seed=1)
    assert rga_mis(g, seed=5).selected == rga_mis(g, seed=5).selected


def test_dga_path():
    path = from_edge_list(3, [(0, 1), (1, 2)])
    assert dga_mis(path).selected == (0, 2)


def test_dga_clique_and_star():
    k4 = from_edge_list(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert len(dga_mis(k4).selected) == 1
    star = from_edge_list(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    assert dga_mis(star).selected == (1, 2, 3, 4)


def test_dga_always_maximal():
    for seed in range(25):
        g = gen_er(25, 0.3, seed=100 + seed)
        assert _maximal_independent(g, dga_mis(g).selected)


def test_greedy_mvc_cases():
    star = from_edge_list(4, [(0, 1), (0, 2), (0, 3)])
    assert greedy_mvc(star).selected == (0,)
    assert greedy_mvc(from_edge_list(4, [])).selected == ()
    assert len(greedy_mvc(from_edge_list(2, [(0, 1)])).selected) == 1


def test_greedy_mvc_always_covers():
    for seed in range(25):
        g = gen_er(25, 0.3, seed=200 + seed)
        assert is_vertex_cover(g, greedy_mvc(g).selected)


def test_toenshoff_mc_cases():
    k3 = from_edge_list(3, [(0, 1), (0, 2), (1, 2)])
    assert toenshoff_greedy_mc(k3).selected == (0, 1, 2)
    assert len(toenshoff_greedy_mc(from_edge_list(3, [])).selected) == 1
    path = from_edge_list(3, [(0, 1), (1, 2)])
    sol = toenshoff_greedy_mc(path)
    assert len(sol.selected) == 2
    assert is_clique(path, sol.selected)


def test_toenshoff_always_clique():
    for seed in range(25):
        g = gen_er(18, 0.4, seed=300 + seed)
        assert is_clique(g, toenshoff_greedy_mc(g).selected)


def test_dga_beats_rga_on_average():
    # degree-aware greedy should not lose to random greedy on regular graphs
    spec = problem("mis")
    dga_total = 0
    rga_total = 0
    for seed in range(50):
        g = gen_rrg(RrgParams(n=60, d=3, seed=seed))
        dga_total += len(dga_mis(g).selected)
        rga_total += len(rga_mis(g, seed=seed).selected)
    assert dga_total >= rga_total


def test_determinism_of_pure_heuristics():
    g = gen_er(20, 0.3, seed=9)
    assert dga_mis(g).selected == dga_mis(g).selected
    assert greedy_mvc(g).selected == greedy_mvc(g).selected
