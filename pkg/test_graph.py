"""Tests for graph construction, bipartitions and graph specs."""

import networkx as nx
import numpy as np
import pytest

from errors import GraphError
from graph import (Graph, checkerboard, find_bipartition, from_networkx, make_complete,
                   make_complete_bipartite, make_cycle, make_edgeless, make_grid, make_path,
                   make_torus2d, parse_graph_spec, require_bipartite_connected, require_ring,
                   ring_edges)


def test_complete_graph():
    g = make_complete(5)
    assert g.vertex_count == 5
    assert g.edge_count == 10
    assert g.neighbors(2) == (0, 1, 3, 4)
    assert np.all(g.degrees == 4)
    assert g.is_connected()
    assert find_bipartition(g) is None


def test_cycle_is_ring():
    g = make_cycle(6)
    assert g.is_ring()
    assert g.neighbors(0) == (1, 5)
    assert g.edge_count == 6
    assert not make_path(6).is_ring()
    assert not make_complete(4).is_ring()


def test_grid_convention():
    """Z^2 box [0,L]x[0,H] has (L+1)(H+1) vertices."""
    g = make_grid(10, 10)
    assert g.vertex_count == 121
    assert g.edge_count == 2 * 10 * 11
    # (x1, x2) = (3, 2) has id 2 * 11 + 3
    assert set(g.neighbors(25)) == {24, 26, 14, 36}
    assert g.degree(0) == 2


def test_torus_is_regular():
    g = make_torus2d(4, 3)
    assert g.vertex_count == 12
    assert np.all(g.degrees == 4)
    assert find_bipartition(g) is None  # odd height
    assert find_bipartition(make_torus2d(4, 4)) is not None


def test_edgeless_and_complete_bipartite():
    g = make_edgeless(3)
    assert g.edge_count == 0
    assert len(g.components()) == 3

    kb = make_complete_bipartite(2, 3)
    bipartition = require_bipartite_connected(kb)
    assert (bipartition.n1, bipartition.n2) == (2, 3)
    assert bipartition.vertices(1) == [0, 1]


def test_bipartition_of_cycle():
    bipartition = find_bipartition(make_cycle(6))
    assert bipartition.side == (1, 2, 1, 2, 1, 2)
    xi_plus, xi_minus = checkerboard(bipartition)
    assert xi_plus.tolist() == [1, 2, 1, 2, 1, 2]
    assert xi_minus.tolist() == [2, 1, 2, 1, 2, 1]
    assert find_bipartition(make_cycle(5)) is None


def test_require_bipartite_connected_rejects():
    with pytest.raises(GraphError):
        require_bipartite_connected(make_complete(3))
    with pytest.raises(GraphError):
        require_bipartite_connected(make_edgeless(2))


def test_require_ring():
    require_ring(make_cycle(10))
    with pytest.raises(GraphError):
        require_ring(make_path(10))


def test_ring_edges():
    assert ring_edges(4) == [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_parse_graph_spec():
    assert parse_graph_spec("complete:7").vertex_count == 7
    assert parse_graph_spec("cycle:12").is_ring()
    assert parse_graph_spec("grid:10x10").vertex_count == 121
    assert parse_graph_spec("torus2d:5x4").vertex_count == 20
    assert parse_graph_spec("edgeless:3").edge_count == 0
    assert parse_graph_spec("path:4").edge_count == 3
    g = parse_graph_spec("complete-bipartite:3,4")
    assert g.vertex_count == 7
    assert g.spec == "complete-bipartite:3,4"


@pytest.mark.parametrize("spec", ["", "complete", "complete:x", "star:5", "grid:10", "cycle:2"])
def test_parse_graph_spec_errors(spec):
    with pytest.raises(GraphError):
        parse_graph_spec(spec)


def test_invalid_adjacency_rejected():
    with pytest.raises(GraphError):
        Graph(2, ((1,), ()))  # not symmetric
    with pytest.raises(GraphError):
        Graph(2, ((0, 1), (0,)))  # self-loop
    with pytest.raises(GraphError):
        Graph(3, ((2, 1), (0,), (0,)))  # unsorted
    with pytest.raises(GraphError):
        Graph(2, ((5,), (0,)))
    with pytest.raises(GraphError):
        make_cycle(2)


def test_csr_arrays_match_adjacency():
    g = make_grid(3, 2)
    for x in range(g.vertex_count):
        assert tuple(g.neighbor_array(x).tolist()) == g.neighbors(x)
    assert list(g.edges())[:2] == [(0, 1), (0, 4)]


def test_large_complete_graph_degrees():
    g = make_complete(1000)
    assert np.all(g.degrees == 999)
    assert g.edge_count == 1000 * 999 // 2


def test_torus_edge_count():
    g = make_torus2d(4, 4)
    assert g.edge_count == 32
    assert np.all(g.degrees == 4)


@pytest.mark.parametrize("n", range(3, 11))
def test_cycle_bipartite_iff_even(n):
    bipartition = find_bipartition(make_cycle(n))
    if n % 2:
        assert bipartition is None
    else:
        assert bipartition.n1 == bipartition.n2 == n // 2


def _two_colourable(g):
    """Search all 2^N assignments for a proper colouring."""
    for code in range(1 << g.vertex_count):
        if all((code >> x) & 1 != (code >> y) & 1 for x, y in g.edges()):
            return True
    return False


def test_bipartition_matches_exhaustive_search():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 11))
        adjacency = [set() for _ in range(n)]
        for x in range(n):
            for y in range(x + 1, n):
                if rng.random() < 0.3:
                    adjacency[x].add(y)
                    adjacency[y].add(x)
        g = Graph(n, tuple(tuple(sorted(s)) for s in adjacency))
        bipartition = find_bipartition(g)
        assert (bipartition is not None) == _two_colourable(g)
        if bipartition is not None:
            assert all(bipartition.side[x] != bipartition.side[y] for x, y in g.edges())
            for members in g.components():
                assert bipartition.side[members[0]] == 1


@pytest.mark.parametrize("length,height", [(1, 1), (2, 3), (4, 4), (10, 10), (5, 2)])
def test_grid_bipartition_is_balanced(length, height):
    bipartition = require_bipartite_connected(make_grid(length, height))
    assert abs(bipartition.n1 - bipartition.n2) <= 1
    assert bipartition.side[0] == 1


def test_components_of_disjoint_pieces():
    g = Graph(5, ((4,), (3,), (), (1,), (0,)))
    assert g.components() == [[0, 4], [1, 3], [2]]
    assert not g.is_connected()
    assert find_bipartition(g).side == (1, 1, 1, 2, 2)


def test_from_networkx():
    g = from_networkx(nx.relabel_nodes(nx.path_graph(3), {0: 2, 1: 0, 2: 1}), spec="path")
    assert g.neighbors(0) == (1, 2)
    assert g.nx_graph.number_of_edges() == 2
    with pytest.raises(GraphError):
        from_networkx(nx.grid_2d_graph(2, 2))
    looped = nx.path_graph(3)
    looped.add_edge(1, 1)
    with pytest.raises(GraphError):
        from_networkx(looped)
