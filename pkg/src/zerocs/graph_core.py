"""Undirected graph storage, hop propagation and connectivity queries."""

from __future__ import annotations

import io
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or feature input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in compressed row form.

    ``indptr``/``indices`` follow the CSR convention: the sorted neighbors of
    node ``u`` are ``indices[indptr[u]:indptr[u + 1]]``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    _norm_adj: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < nbrs.size and nbrs[i] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def normalized_adjacency(self) -> sp.csr_matrix:
        """D^{-1/2} A D^{-1/2}; rows of degree-0 nodes are all zero."""
        if self._norm_adj is None:
            deg = self.degrees.astype(np.float64)
            inv_sqrt = np.zeros_like(deg)
            nz = deg > 0
            inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
            d = sp.diags(inv_sqrt)
            a_hat = (d @ self.adjacency() @ d).tocsr()
            object.__setattr__(self, "_norm_adj", a_hat)
        return self._norm_adj

    @classmethod
    def from_edges(cls, edges, n: int | None = None) -> "Graph":
        """Build from an iterable of (u, v) pairs.

        Edges are symmetrized and deduplicated and self-loops are dropped.
        Without ``n`` the node count is ``max id + 1``.
        """
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and arr.min() < 0:
            raise ValueError("node ids must be non-negative")
        inferred = int(arr.max()) + 1 if arr.size else 0
        if n is None:
            n = inferred
        elif n < inferred:
            raise ValueError(f"declared node count {n} is smaller than max id + 1 = {inferred}")
        arr = arr[arr[:, 0] != arr[:, 1]]
        both = np.concatenate([arr, arr[:, ::-1]])
        if both.size:
            both = np.unique(both, axis=0)
        counts = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = both[:, 1].copy() if both.size else np.zeros(0, dtype=np.int64)
        return cls(n=int(n), indptr=indptr, indices=indices)


def as_nodeset(nodes, n: int | None = None) -> np.ndarray:
    """Sorted, deduplicated int64 id array, bounds-checked against ``n``."""
    ids = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
    if ids.size and ids[0] < 0:
        raise IndexError(f"node id {ids[0]} out of bounds")
    if n is not None and ids.size and ids[-1] >= n:
        raise IndexError(f"node id {ids[-1]} out of bounds for graph with {n} nodes")
    return ids


def load_graph(source, n: int | None = None) -> Graph:
    """Parse a whitespace-separated ``u v`` edge list.

    ``source`` may be a path, a text/binary stream or raw bytes. Lines
    starting with ``#`` and blank lines are skipped.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    edges = []
    for lineno, line in enumerate(io.StringIO(data), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {s!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer node id in {s!r}") from None
        if u < 0 or v < 0:
            raise ValueError(f"line {lineno}: negative node id")
        edges.append((u, v))
    return Graph.from_edges(np.array(edges, dtype=np.int64).reshape(-1, 2), n=n)


def load_features(source, n: int | None = None) -> np.ndarray:
    """Read a headerless CSV feature matrix, one row per node in id order."""
    x = np.loadtxt(source, delimiter=",", dtype=np.float64, ndmin=2)
    if n is not None and x.shape[0] != n:
        raise GraphFormatError(f"feature matrix has {x.shape[0]} rows, graph has {n} nodes")
    if not np.all(np.isfinite(x)):
        raise GraphFormatError("feature matrix contains non-finite values")
    return x


def propagate(g: Graph, x: np.ndarray, k_max: int) -> list[np.ndarray]:
    """Hop tokens ``[X, ÂX, Â²X, ..., Â^k_max X]``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"feature matrix shape {x.shape} does not match {g.n} nodes")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    out = [x]
    if k_max == 0:
        return out
    a_hat = g.normalized_adjacency()
    for _ in range(k_max):
        out.append(np.asarray(a_hat @ out[-1]))
    return out


def khop_nodes(g: Graph, seeds, k: int) -> np.ndarray:
    """All nodes within ``k`` hops of any seed, seeds included."""
    seeds = as_nodeset(seeds, g.n)
    if seeds.size == 0:
        raise ValueError("seed set is empty")
    if k < 0:
        raise ValueError("k must be >= 0")
    seen = np.zeros(g.n, dtype=bool)
    seen[seeds] = True
    frontier = seeds
    for _ in range(k):
        if frontier.size == 0:
            break
        nbrs = np.concatenate([g.neighbors(u) for u in frontier])
        new = np.unique(nbrs[~seen[nbrs]])
        seen[new] = True
        frontier = new
    return np.flatnonzero(seen)


def induced_subgraph(g: Graph, nodes) -> tuple[Graph, dict[int, int]]:
    """Subgraph on ``nodes`` and the old->new id map (new ids follow sorted order)."""
    nodes = as_nodeset(nodes, g.n)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(nodes.size)
    edges = g.edges()
    keep = (remap[edges[:, 0]] >= 0) & (remap[edges[:, 1]] >= 0)
    sub = Graph.from_edges(remap[edges[keep]], n=int(nodes.size))
    return sub, {int(u): i for i, u in enumerate(nodes)}


def is_connected(g: Graph, nodes) -> bool:
    """True iff the subgraph induced by ``nodes`` has a single component."""
    nodes = as_nodeset(nodes, g.n)
    if nodes.size == 0:
        raise ValueError("connectivity of an empty node set is undefined")
    inside = np.zeros(g.n, dtype=bool)
    inside[nodes] = True
    seen = np.zeros(g.n, dtype=bool)
    start = int(nodes[0])
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if inside[v] and not seen[v]:
                seen[v] = True
                count += 1
                queue.append(int(v))
    return count == nodes.size


def component_of(g: Graph, nodes, start: int) -> np.ndarray:
    """Nodes of the component containing ``start`` within the subgraph induced by ``nodes``."""
    nodes = as_nodeset(nodes, g.n)
    inside = np.zeros(g.n, dtype=bool)
    inside[nodes] = True
    if not inside[start]:
        raise ValueError(f"start node {start} not in node set")
    seen = np.zeros(g.n, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if inside[v] and not seen[v]:
                seen[v] = True
                queue.append(int(v))
    return np.flatnonzero(seen)
