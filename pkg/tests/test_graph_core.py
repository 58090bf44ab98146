import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_adjacency, random_graph
from zerocs.datasets import ids, karate_communities, karate_graph
from zerocs.graph_core import (
    Graph,
    GraphFormatError,
    induced_subgraph,
    is_connected,
    khop_nodes,
    load_graph,
    propagate,
)


def dense_norm_adj(g):
    a = dense_adjacency(g)
    deg = a.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return inv[:, None] * a * inv[None, :]


def test_load_path_graph():
    g = load_graph(b"0 1\n1 2")
    assert (g.n, g.m) == (3, 2)
    assert list(g.neighbors(1)) == [0, 2]


def test_load_dedups_and_symmetrizes():
    g = load_graph(b"0 1\n1 0\n0 1")
    assert (g.n, g.m) == (2, 1)


def test_load_skips_comments_and_self_loops():
    g = load_graph(b"# header\n0 1\n\n2 2\n")
    assert (g.n, g.m) == (3, 1)
    assert g.degrees.tolist() == [1, 1, 0]


def test_load_declared_count_keeps_isolated():
    g = load_graph(b"0 1", n=5)
    assert g.n == 5 and g.degrees[4] == 0


def test_load_errors():
    with pytest.raises(GraphFormatError, match="line 2"):
        load_graph(b"0 1\n1 x\n")
    with pytest.raises(GraphFormatError, match="line 1"):
        load_graph(b"0 1 2\n")
    with pytest.raises(ValueError, match="negative"):
        load_graph(b"0 -1\n")


def test_toy_graph_one_hop(toy):
    assert toy.degrees[ids(1)[0]] == 2
    assert khop_nodes(toy, ids(1), 1).tolist() == ids(1, 2, 3)


def test_graph_invariants_karate():
    g = karate_graph()
    assert (g.n, g.m) == (34, 78)
    assert g.degrees.sum() == 2 * g.m
    for u in range(g.n):
        nb = g.neighbors(u)
        assert np.all(np.diff(nb) > 0) and u not in nb
        for v in nb:
            assert g.has_edge(v, u)


def test_propagate_single_edge():
    g = Graph.from_edges([(0, 1)])
    hops = propagate(g, np.array([[1.0], [0.0]]), 1)
    np.testing.assert_array_equal(hops[1], [[0.0], [1.0]])


def test_propagate_zero_hops():
    g = random_graph(6, 0.5, 0)
    x = np.arange(12.0).reshape(6, 2)
    hops = propagate(g, x, 0)
    assert len(hops) == 1 and hops[0] is not None
    np.testing.assert_array_equal(hops[0], x)


def test_propagate_triangle():
    g = Graph.from_edges([(0, 1), (1, 2), (0, 2)])
    x = np.eye(3)
    hops = propagate(g, x, 1)
    expected = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
    np.testing.assert_allclose(hops[1], expected, atol=1e-15)


def test_propagate_isolated_rows_zero():
    g = Graph.from_edges([(0, 1)], n=3)
    hops = propagate(g, np.ones((3, 2)), 3)
    for h in hops[1:]:
        np.testing.assert_array_equal(h[2], 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_propagate_matches_dense_power(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 21))
    g = random_graph(n, 0.3, seed)
    x = rng.normal(size=(n, 4))
    a_hat = dense_norm_adj(g)
    hops = propagate(g, x, 4)
    for k, h in enumerate(hops):
        np.testing.assert_allclose(h, np.linalg.matrix_power(a_hat, k) @ x, atol=1e-10)


def test_propagate_dimension_mismatch():
    with pytest.raises(ValueError):
        propagate(Graph.from_edges([(0, 1)]), np.ones((3, 1)), 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_propagate_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = random_graph(12, 0.3, seed)
    x, y = rng.normal(size=(2, 12, 3))
    px, py, pxy = propagate(g, x, 3), propagate(g, y, 3), propagate(g, a * x + b * y, 3)
    for k in range(4):
        np.testing.assert_allclose(pxy[k], a * px[k] + b * py[k], atol=1e-12)


def test_khop_zero_is_seeds(toy):
    assert khop_nodes(toy, [3, 5], 0).tolist() == [3, 5]


@pytest.mark.parametrize("seed", range(4))
def test_khop_two_rounds_of_expansion(seed):
    g = random_graph(10, 0.25, seed)
    a = dense_adjacency(g) > 0
    for v in range(g.n):
        reach = np.zeros(g.n, dtype=bool)
        reach[v] = True
        for _ in range(2):
            reach = reach | a[reach].any(axis=0)
        assert khop_nodes(g, [v], 2).tolist() == np.flatnonzero(reach).tolist()


def test_khop_bounds():
    with pytest.raises(IndexError):
        khop_nodes(Graph.from_edges([(0, 1)]), [5], 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 4))
def test_khop_monotone_and_connected(seed, k):
    g = random_graph(15, 0.15, seed)
    v = seed % g.n
    small, big = khop_nodes(g, [v], k), khop_nodes(g, [v], k + 1)
    assert set(small) <= set(big)
    assert is_connected(g, small)


def test_induced_subgraph_star_without_center():
    star = Graph.from_edges([(0, i) for i in range(1, 5)])
    sub, mapping = induced_subgraph(star, [1, 2, 3, 4])
    assert (sub.n, sub.m) == (4, 0)
    assert mapping == {1: 0, 2: 1, 3: 2, 4: 3}


@pytest.mark.parametrize("seed", range(3))
def test_induced_subgraph_edge_filter(seed):
    g = random_graph(12, 0.3, seed)
    nodes = khop_nodes(g, [seed], 1)
    sub, mapping = induced_subgraph(g, nodes)
    keep = {(mapping[u], mapping[v]) for u, v in g.edges() if u in mapping and v in mapping}
    assert {tuple(e) for e in sub.edges()} == keep


def test_induced_subgraph_bounds():
    with pytest.raises(IndexError):
        induced_subgraph(Graph.from_edges([(0, 1)]), [0, 2])


def test_is_connected_basic():
    path = Graph.from_edges([(0, 1), (1, 2)])
    assert not is_connected(path, [0, 2])
    assert is_connected(path, [2])
    assert is_connected(path, [0, 1, 2])
    with pytest.raises(ValueError):
        is_connected(path, [])


def _components_union_find(g, nodes):
    parent = {u: u for u in nodes}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for u, v in g.edges():
        if u in parent and v in parent:
            parent[find(u)] = find(v)
    return len({find(u) for u in nodes})


def test_karate_factions_connected():
    g = karate_graph()
    for comm in karate_communities():
        assert is_connected(g, comm)
        assert _components_union_find(g, set(comm.tolist())) == 1


@pytest.mark.parametrize("seed", range(5))
def test_is_connected_matches_union_find(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(12, 0.2, seed)
    for _ in range(20):
        nodes = np.flatnonzero(rng.random(12) < 0.5)
        if nodes.size:
            assert is_connected(g, nodes) == (_components_union_find(g, set(nodes.tolist())) == 1)
