"""Per-node community scores from embedding similarity to the query."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import as_nodeset

SIMILARITIES = ("cosine", "l1", "l2")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    scores: np.ndarray
    query: np.ndarray
    similarity: str = "cosine"

    def __len__(self):
        return self.scores.size

    @property
    def mean(self) -> float:
        return float(self.scores.mean())


def _unit_rows(a: np.ndarray) -> np.ndarray:
    # divide by the max magnitude first so squaring cannot under/overflow
    big = np.abs(a).max(axis=1, keepdims=True)
    b = a / np.where(big > 0, big, 1.0)
    norm = np.linalg.norm(b, axis=1, keepdims=True)
    return b / np.where(norm > 0, norm, 1.0)


def similarity_matrix(z: np.ndarray, zq: np.ndarray, similarity: str = "cosine") -> np.ndarray:
    """(n, |q|) similarities between every row of ``z`` and every query row.

    Under cosine a zero-norm vector contributes 0 for every pair it is in.
    """
    if similarity == "cosine":
        return _unit_rows(z) @ _unit_rows(zq).T
    if similarity in ("l1", "l2"):
        diff = z[:, None, :] - zq[None, :, :]
        order = 1 if similarity == "l1" else 2
        return 1.0 / (1.0 + np.linalg.norm(diff, ord=order, axis=2))
    raise ValueError(f"unknown similarity {similarity!r}; expected one of {SIMILARITIES}")


def compute_scores(embeddings, query, similarity: str = "cosine") -> ScoreVector:
    """Average similarity of each node's embedding to the query nodes' embeddings.

    ``embeddings`` is an (n, d_m) array or a list of ``EmbeddingPair`` (the
    node-level vector is used).
    """
    if not isinstance(embeddings, np.ndarray):
        embeddings = np.stack([p.z_node for p in embeddings])
    z = np.asarray(embeddings, dtype=np.float64)
    q = as_nodeset(query, z.shape[0])
    if q.size == 0:
        raise ValueError("query is empty")
    s = similarity_matrix(z, z[q], similarity).sum(axis=1) / q.size
    return ScoreVector(scores=s, query=q, similarity=similarity)
