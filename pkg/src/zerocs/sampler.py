"""Conductance and adaptive hop-ball selection for pre-training contexts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import Graph, as_nodeset, khop_nodes

# Assigned when one side of the cut has zero volume (including a ball that
# has swallowed the whole graph), so such sets never win an argmin.
SATURATED_CONDUCTANCE = 1.0


@dataclass(frozen=True)
class AugmentedSubgraph:
    center: int
    k_star: int
    nodes: np.ndarray
    conductance: float


def conductance(g: Graph, c) -> float:
    """Cut edges over the smaller side's degree volume."""
    c = as_nodeset(c, g.n)
    if c.size == 0 or c.size == g.n:
        raise ValueError("conductance needs a nonempty proper subset of V")
    inside = np.zeros(g.n, dtype=bool)
    inside[c] = True
    deg = g.degrees
    vol_c = int(deg[c].sum())
    vol_rest = int(deg.sum()) - vol_c
    denom = min(vol_c, vol_rest)
    if denom == 0:
        return SATURATED_CONDUCTANCE
    rows = np.repeat(np.arange(g.n), deg)
    cut = int(np.count_nonzero(inside[rows] & ~inside[g.indices]))
    return cut / denom


def _ball_conductance(g: Graph, ball: np.ndarray) -> float:
    if ball.size == g.n:
        return SATURATED_CONDUCTANCE
    return conductance(g, ball)


def sample_augmented(g: Graph, center: int, k_max: int = 5) -> AugmentedSubgraph:
    """Pick the hop count in ``1..k_max`` whose ball around ``center`` has the
    lowest conductance. Ties go to the smaller hop count."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not 0 <= center < g.n:
        raise IndexError(f"center {center} out of bounds")
    best = None
    for k in range(1, k_max + 1):
        ball = khop_nodes(g, [center], k)
        phi = _ball_conductance(g, ball)
        if best is None or phi < best.conductance:
            best = AugmentedSubgraph(center=int(center), k_star=k, nodes=ball, conductance=phi)
    return best


def sample_all(g: Graph, k_max: int = 5) -> list[AugmentedSubgraph]:
    return [sample_augmented(g, v, k_max) for v in range(g.n)]
