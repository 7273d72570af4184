import pytest

from egnco.graph import (
    complement,
    from_edge_list,
    induced_subgraph,
    is_clique,
    is_independent_set,
    is_vertex_cover,
)
from egnco.generators import gen_er


def test_from_edge_list_basic():
    g = from_edge_list(3, [(0, 1), (1, 2)])
    assert g.n == 3
    assert g.m == 2
    assert g.degrees == (1, 2, 1)
    assert g.adjacency == ((1,), (0, 2), (1,))


def test_from_edge_list_normalizes():
    g = from_edge_list(3, [(0, 1), (1, 0), (2, 2)])
    assert g.m == 1
    assert g.edges == ((0, 1),)


def test_from_edge_list_rejects_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        from_edge_list(2, [(0, 5)])


def test_complement_triangle_and_empty():
    k3 = from_edge_list(3, [(0, 1), (0, 2), (1, 2)])
    assert complement(k3).m == 0
    empty = from_edge_list(3, [])
    assert complement(empty).edges == k3.edges


def test_complement_path_by_enumeration():
    path = from_edge_list(3, [(0, 1), (1, 2)])
    comp = complement(path)
    # oracle: enumerate all pairs, keep the ones the path lacks
    expected = [
        (u, v)
        for u in range(3)
        for v in range(u + 1, 3)
        if (u, v) not in set(path.edges)
    ]
    assert list(comp.edges) == expected == [(0, 2)]


def test_complement_involution_on_random_graphs():
    for seed in range(20):
        g = gen_er(12, 0.4, seed=seed)
        assert complement(complement(g)) == g


def test_induced_subgraph():
    k3 = from_edge_list(3, [(0, 1), (0, 2), (1, 2)])
    sub, relabel = induced_subgraph(k3, {0, 1})
    assert sub.n == 2 and sub.edges == ((0, 1),)
    assert relabel == {0: 0, 1: 1}

    g = gen_er(8, 0.5, seed=1)
    same, relabel = induced_subgraph(g, range(8))
    assert same == g
    assert relabel == {i: i for i in range(8)}

    path = from_edge_list(3, [(0, 1), (1, 2)])
    iso, relabel = induced_subgraph(path, {0, 2})
    assert iso.n == 2 and iso.m == 0
    assert relabel == {0: 0, 2: 1}


def test_predicates():
    k3 = from_edge_list(3, [(0, 1), (0, 2), (1, 2)])
    assert is_clique(k3, {0, 1, 2})
    edge = from_edge_list(2, [(0, 1)])
    assert not is_independent_set(edge, {0, 1})
    path = from_edge_list(3, [(0, 1), (1, 2)])
    # node 1 touches both edges
    assert is_vertex_cover(path, {1})
    assert not is_vertex_cover(path, {0})


def test_predicate_dualities_on_random_graphs():
    for seed in range(15):
        g = gen_er(10, 0.35, seed=seed)
        comp = complement(g)
        import numpy as np

        rng = np.random.default_rng(seed)
        s = {int(v) for v in rng.choice(10, size=4, replace=False)}
        assert is_independent_set(g, s) == is_clique(comp, s)
        rest = set(range(10)) - s
        assert is_vertex_cover(g, s) == is_independent_set(g, rest)
