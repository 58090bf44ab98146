"""Community identification by expected score gain (ESG).

ESG rewards a node set for holding more score mass than a random set of
the same size would, damped by ``|C|^tau``. Finding the best connected,
query-containing set is NP-hard, so two heuristics are provided alongside
an exhaustive oracle for graphs of at most 20 nodes.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph_core import Graph, as_nodeset, is_connected
from .scoring import ScoreVector

ORACLE_MAX_NODES = 20


@dataclass(frozen=True)
class EsgConfig:
    tau: float = 0.5
    max_size: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be positive")

    def size_cap(self, n: int) -> int:
        """Explicit ``max_size``, else half the graph capped at 10000 nodes."""
        if self.max_size is not None:
            return min(self.max_size, n)
        return min(math.ceil(0.5 * n), 10000)


@dataclass(frozen=True, eq=False)
class Community:
    nodes: np.ndarray
    esg: float
    method: str
    connected: bool
    query: np.ndarray
    iterations: int = 0
    prefix_len: int | None = None

    def format_line(self) -> str:
        q = ",".join(map(str, self.query))
        members = ",".join(map(str, self.nodes))
        return f"{q} | {self.method} | {self.esg!r} | {str(self.connected).lower()} | {members}"


def _scores(s) -> np.ndarray:
    return s.scores if isinstance(s, ScoreVector) else np.asarray(s, dtype=np.float64)


def esg(s, c, g: Graph | None = None, tau: float = 0.5) -> float:
    """Expected score gain of node set ``c``."""
    scores = _scores(s)
    c = as_nodeset(c, scores.size)
    if c.size == 0:
        raise ValueError("ESG of an empty set is undefined")
    mean = s.mean if isinstance(s, ScoreVector) else scores.mean()
    return _esg_from_sum(float(scores[c].sum()), c.size, mean, tau)


def _esg_from_sum(total: float, size, mean: float, tau: float):
    return (total - mean * size) / np.power(size, tau)


def _check_query(g: Graph, scores: np.ndarray, query) -> np.ndarray:
    if scores.size != g.n:
        raise ValueError(f"score vector has {scores.size} entries, graph has {g.n} nodes")
    q = as_nodeset(query, g.n)
    if q.size == 0:
        raise ValueError("query is empty")
    return q


def _community(g, scores, nodes, method, tau, query, iterations=0, prefix_len=None) -> Community:
    nodes = as_nodeset(nodes, g.n)
    return Community(
        nodes=nodes,
        esg=float(esg(scores, nodes, tau=tau)),
        method=method,
        connected=is_connected(g, nodes),
        query=query,
        iterations=iterations,
        prefix_len=prefix_len,
    )


def local_search(s, g: Graph, query, cfg: EsgConfig = EsgConfig()) -> Community:
    """Greedy boundary expansion.

    Repeatedly pops the highest-scoring untraversed node adjacent to the
    traversed set and keeps it only if it raises ESG above the best seen so
    far (which starts at -inf, so the first candidate is always taken).
    Stops at the first rejection, when the boundary empties, or when the
    community reaches the size cap.
    """
    scores = _scores(s)
    q = _check_query(g, scores, query)
    mean = float(scores.mean())
    cap = cfg.size_cap(g.n)
    traversed = np.zeros(g.n, dtype=bool)
    traversed[q] = True
    queued = traversed.copy()
    members = list(q)
    total = float(scores[q].sum())
    heap = []

    def push_neighbors(u):
        for v in g.neighbors(u):
            if not queued[v]:
                queued[v] = True
                heapq.heappush(heap, (-scores[v], int(v)))

    for u in q:
        push_neighbors(u)
    best = -np.inf
    while heap and len(members) < cap:
        _, u = heapq.heappop(heap)
        traversed[u] = True
        cand = _esg_from_sum(total + scores[u], len(members) + 1, mean, cfg.tau)
        if cand > best:
            best = cand
            members.append(u)
            total += scores[u]
            push_neighbors(u)
        else:
            break
    return _community(g, s, members, "local", cfg.tau, q)


def prefix_esg(sorted_scores: np.ndarray, mean: float, tau: float) -> np.ndarray:
    """ESG of every prefix of ``sorted_scores``; entry ``i`` is the top-(i+1) set."""
    sizes = np.arange(1, sorted_scores.size + 1)
    return _esg_from_sum(np.cumsum(sorted_scores), sizes, mean, tau)


def descending_order(scores: np.ndarray) -> np.ndarray:
    """Node ids by score descending, ties by ascending id."""
    return np.lexsort((np.arange(scores.size), -scores))


def global_search(s, g: Graph, query, cfg: EsgConfig = EsgConfig()) -> Community:
    """Binary search for the peak of prefix ESG over the descending-score order.

    Position ``i`` stands for the top-(i+1) prefix. Each step compares the
    prefix at the (upper) midpoint with the one a node shorter and keeps the
    half that can still hold the peak, so a unimodal prefix sequence yields
    its exact argmax in at most ceil(log2 n) steps. The returned community is
    the query plus the chosen prefix; it need not be connected.
    """
    scores = _scores(s)
    q = _check_query(g, scores, query)
    mean = float(scores.mean())
    order = descending_order(scores)
    ranked = scores[order]
    csum = np.cumsum(ranked)

    def f(i):
        return _esg_from_sum(csum[i], i + 1, mean, cfg.tau)

    lo, hi = 0, cfg.size_cap(g.n) - 1
    iterations = 0
    while lo < hi:
        iterations += 1
        mid = (lo + hi + 1) // 2
        if f(mid) > f(mid - 1):
            lo = mid
        else:
            hi = mid - 1
    nodes = np.union1d(q, order[: lo + 1])
    return _community(g, s, nodes, "global", cfg.tau, q, iterations, lo + 1)


def global_search_trace(s, g: Graph, cfg: EsgConfig = EsgConfig()):
    """Per-iteration ``(mid_set, mid_esg, left_set, left_esg, lo, hi)`` after each step."""
    scores = _scores(s)
    mean = float(scores.mean())
    order = descending_order(scores)
    pesg = prefix_esg(scores[order], mean, cfg.tau)
    lo, hi = 0, cfg.size_cap(g.n) - 1
    trace = []
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pesg[mid] > pesg[mid - 1]:
            lo = mid
        else:
            hi = mid - 1
        trace.append((order[: mid + 1], pesg[mid], order[:mid], pesg[mid - 1], lo, hi))
    return trace


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


def _mask_connected(mask: int, adj: list[int]) -> bool:
    reach = frontier = mask & -mask
    while frontier:
        nb = 0
        f = frontier
        while f:
            b = f & -f
            nb |= adj[b.bit_length() - 1]
            f ^= b
        nb &= mask & ~reach
        reach |= nb
        frontier = nb
    return reach == mask


def _mask_nodes(mask: int) -> tuple:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def oracle_search(s, g: Graph, query, tau: float = 0.5, rel_tol: float = 1e-12) -> Community:
    """Exact IESG optimum by enumerating every query-containing node set.

    Ties (ESG within ``rel_tol``) go to the smaller set, then to the
    lexicographically smaller sorted id tuple.
    """
    scores = _scores(s)
    if g.n > ORACLE_MAX_NODES:
        raise ValueError(f"oracle_search refuses graphs with more than {ORACLE_MAX_NODES} nodes (got {g.n})")
    q = _check_query(g, scores, query)
    mean = float(scores.mean())
    free = np.setdiff1d(np.arange(g.n), q)
    r = free.size
    sub = np.arange(1 << r, dtype=np.int64)
    sizes = q.size + _popcount(sub)
    sums = np.full(sub.size, float(scores[q].sum()))
    node_masks = np.full(sub.size, int(sum(1 << int(u) for u in q)), dtype=np.int64)
    for j, v in enumerate(free):
        bit = (sub >> j) & 1
        sums += bit * scores[v]
        node_masks |= bit << int(v)
    values = _esg_from_sum(sums, sizes, mean, tau)
    adj = [int(sum(1 << int(v) for v in g.neighbors(u))) for u in range(g.n)]

    ranked = np.argsort(-values, kind="stable")
    best_val = None
    for i in ranked:
        if _mask_connected(int(node_masks[i]), adj):
            best_val = values[i]
            break
    if best_val is None:
        raise ValueError("no connected node set contains the query")
    tol = rel_tol * max(1.0, abs(best_val))
    tied = np.flatnonzero(values >= best_val - tol)
    for size in np.unique(sizes[tied]):
        group = sorted(_mask_nodes(int(node_masks[i])) for i in tied[sizes[tied] == size])
        for nodes in group:
            mask = sum(1 << u for u in nodes)
            if _mask_connected(mask, adj):
                return _community(g, s, nodes, "oracle", tau, q)
    raise AssertionError("unreachable: best connected set vanished")


def setcover_gadget(universe_size: int, sets):
    """Graph, scores and query encoding a set-cover instance.

    Node layout: elements ``0..|M|-1``, then one node per set, then the apex.
    Elements and apex score ``1/(|M|+1)``, set nodes ``1/(|M||N|)``; the
    query is every element plus the apex. Meant for ``tau = 1``.
    """
    m = int(universe_size)
    sets = [sorted(set(int(e) for e in s)) for s in sets]
    k = len(sets)
    covered = set().union(*sets) if sets else set()
    for e in covered:
        if not 0 <= e < m:
            raise ValueError(f"element {e} outside universe of size {m}")
    missing = set(range(m)) - covered
    if missing:
        raise ValueError(f"elements {sorted(missing)} are not covered by any set")
    apex = m + k
    edges = [(e, m + j) for j, s in enumerate(sets) for e in s]
    edges += [(apex, m + j) for j in range(k)]
    g = Graph.from_edges(edges, n=m + k + 1)
    scores = np.full(g.n, 1.0 / (m + 1))
    scores[m : m + k] = 1.0 / (m * k)
    query = np.append(np.arange(m), apex)
    return g, ScoreVector(scores=scores, query=query, similarity="cosine"), query


def gadget_chosen_sets(c: Community, universe_size: int, n_sets: int) -> list[int]:
    """Indices of the set nodes a community pulled in beyond the query."""
    m = universe_size
    return [int(u) - m for u in c.nodes if m <= u < m + n_sets]
