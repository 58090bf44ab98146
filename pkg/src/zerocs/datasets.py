"""Small bundled graphs used by tests and the demo scripts."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .graph_core import Graph, load_graph

# Seven-node toy graph: a triangle {1, 2, 3} bridged through node 4 to the
# clique {4, 5, 6, 7}. Labels 1..7 map to ids 0..6.
TOY_EDGES_1BASED = [(1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)]
TOY_SCORES = np.array([0.1, 0.2, 0.4, 0.7, 0.9, 0.6, 0.8])


def toy_graph() -> Graph:
    return Graph.from_edges([(u - 1, v - 1) for u, v in TOY_EDGES_1BASED], n=7)


def ids(*labels: int) -> list[int]:
    """Toy-graph labels (1-based) to node ids."""
    return [lab - 1 for lab in labels]


def _data_path(name: str):
    return resources.files("zerocs").joinpath("data", name)


def karate_graph() -> Graph:
    with _data_path("karate.edgelist").open("rb") as fh:
        return load_graph(fh)


def karate_communities() -> list[np.ndarray]:
    from .pipeline import load_communities

    with _data_path("karate_communities.txt").open("r") as fh:
        return load_communities(fh)


def karate_paths() -> tuple[str, str]:
    return str(_data_path("karate.edgelist")), str(_data_path("karate_communities.txt"))


def identity_features(n: int) -> np.ndarray:
    """One-hot node features, the fallback when a graph ships without any."""
    return np.eye(n)
