import numpy as np
import pytest

from zerocs.datasets import toy_graph
from zerocs.graph_core import Graph

ACCEPTANCE_LINES = []


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    return Graph.from_edges(np.column_stack([iu[0][keep], iu[1][keep]]), n=n)


def dense_adjacency(g):
    a = np.zeros((g.n, g.n))
    for u, v in g.edges():
        a[u, v] = a[v, u] = 1.0
    return a


@pytest.fixture
def toy():
    return toy_graph()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, n_max=12, n_min=2):
    """Random graph, uniform scores and a connected query of one or two nodes."""
    n = int(rng.integers(n_min, n_max + 1))
    g = random_graph(n, float(rng.uniform(0.15, 0.6)), int(rng.integers(1 << 30)))
    u = int(rng.integers(n))
    query = [u]
    nb = g.neighbors(u)
    if nb.size and rng.random() < 0.5:
        query.append(int(rng.choice(nb)))
    return g, rng.random(n), sorted(query)
