"""Global search in pictures: the prefix ESG curve and the binary search on it.

Sorting scores in descending order and growing the top prefix gives an ESG
curve that usually rises then falls. Binary search finds its peak in a
logarithmic number of comparisons.
"""

import math

import numpy as np

from zerocs.graph_core import Graph
from zerocs.identify import EsgConfig, descending_order, global_search, prefix_esg

rng = np.random.default_rng(7)
n = 60
scores = np.concatenate([rng.normal(0.8, 0.05, 12), rng.normal(0.2, 0.1, n - 12)])
order = descending_order(scores)
curve = prefix_esg(scores[order], scores.mean(), 0.5)

peak = int(np.argmax(curve))
width = 50
lo_v, hi_v = curve.min(), curve.max()
for i in range(0, n, 3):
    bar = int(round((curve[i] - lo_v) / (hi_v - lo_v) * width))
    mark = " <- peak" if i <= peak < i + 3 else ""
    print(f"{i + 1:3d} {'#' * bar}{mark}")

g = Graph.from_edges([], n=n)
res = global_search(scores, g, [int(order[0])], EsgConfig(0.5, max_size=n))
print(f"\nexhaustive peak at prefix length {peak + 1}")
print(f"binary search: prefix length {res.prefix_len} after {res.iterations} comparisons "
      f"(bound {math.ceil(math.log2(n))})")

for size in (10**3, 10**5, 10**6):
    s = rng.random(size)
    r = global_search(s, Graph.from_edges([], n=size), [0], EsgConfig(0.5, max_size=size))
    print(f"n = {size:>7}: {r.iterations} comparisons, bound {math.ceil(math.log2(size))}")
