import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from zerocs.datasets import ids
from zerocs.graph_core import Graph, khop_nodes
from zerocs.sampler import SATURATED_CONDUCTANCE, conductance, sample_augmented


def brute_conductance(g, c):
    c = set(int(u) for u in c)
    cut = sum(1 for u, v in g.edges() if (u in c) != (v in c))
    vol_c = sum(int(g.degrees[u]) for u in c)
    vol_rest = int(g.degrees.sum()) - vol_c
    return cut / min(vol_c, vol_rest)


def test_toy_one_and_two_hop(toy):
    one = khop_nodes(toy, ids(1), 1)
    two = khop_nodes(toy, ids(1), 2)
    assert conductance(toy, one) == pytest.approx(1 / 7, abs=1e-12)
    assert conductance(toy, two) == pytest.approx(3 / 9, abs=1e-12)


def test_k4_pair():
    k4 = Graph.from_edges([(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert conductance(k4, [0, 1]) == pytest.approx(4 / 6)
    assert conductance(k4, [0, 1]) == pytest.approx(brute_conductance(k4, [0, 1]))


def test_conductance_domain():
    g = Graph.from_edges([(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        conductance(g, [])
    with pytest.raises(ValueError):
        conductance(g, [0, 1, 2])


def test_zero_volume_side_is_sentinel():
    g = Graph.from_edges([(0, 1)], n=3)
    assert conductance(g, [2]) == SATURATED_CONDUCTANCE


def test_sample_toy(toy):
    aug = sample_augmented(toy, ids(1)[0], 5)
    assert aug.k_star == 1
    assert aug.nodes.tolist() == ids(1, 2, 3)
    assert aug.conductance == pytest.approx(1 / 7)


def test_sample_saturating_star():
    star = Graph.from_edges([(0, i) for i in range(1, 4)])
    aug = sample_augmented(star, 0, 5)
    # every ball from the center is all of V
    assert aug.k_star == 1 and aug.conductance == SATURATED_CONDUCTANCE


@pytest.mark.parametrize("seed", range(6))
def test_sample_is_exhaustive_argmin(seed):
    g = random_graph(15, 0.18, seed)
    for v in range(g.n):
        values = []
        for k in range(1, 6):
            ball = khop_nodes(g, [v], k)
            if ball.size == g.n:
                values.append(1.0)
                continue
            vol = int(g.degrees[ball].sum())
            rest = int(g.degrees.sum()) - vol
            values.append(1.0 if min(vol, rest) == 0 else brute_conductance(g, ball))
        aug = sample_augmented(g, v, 5)
        assert aug.k_star == int(np.argmin(values)) + 1
        assert aug.conductance == pytest.approx(min(values))
        assert aug.nodes.tolist() == khop_nodes(g, [v], aug.k_star).tolist()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_conductance_bounds_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(10, 0.3, seed)
    mask = rng.random(10) < 0.5
    if mask.all() or not mask.any():
        return
    c, rest = np.flatnonzero(mask), np.flatnonzero(~mask)
    phi = conductance(g, c)
    assert 0.0 <= phi <= 1.0
    assert phi == pytest.approx(conductance(g, rest), abs=1e-15)
