"""Seven-node walkthrough: sampling, ESG and the three searches by hand.

Nodes are printed with their 1-based labels (triangle 1-2-3, clique 4-7,
bridge 3-4).
"""

import numpy as np

from zerocs.datasets import TOY_SCORES, ids, toy_graph
from zerocs.graph_core import khop_nodes
from zerocs.identify import EsgConfig, esg, global_search, global_search_trace, local_search, oracle_search
from zerocs.sampler import conductance, sample_augmented


def labels(nodes):
    return "{" + ",".join(str(int(v) + 1) for v in sorted(nodes)) + "}"


g = toy_graph()
print(f"graph: {g.n} nodes, {g.m} edges")

print("\naugmented subgraph of node 1")
for k in (1, 2):
    ball = khop_nodes(g, ids(1), k)
    print(f"  {k}-hop ball {labels(ball)}  conductance {conductance(g, ball):.4f}")
aug = sample_augmented(g, ids(1)[0])
print(f"  chosen k* = {aug.k_star}, ball {labels(aug.nodes)}")

print("\nexpected score gain, tau = 0.5")
for c in ((4, 5, 6, 7), (5, 7, 4), (5, 7), (5,)):
    print(f"  ESG{labels(ids(*c))} = {esg(TOY_SCORES, ids(*c)):.4f}")

# cap at |V| so the prefix search sees every length
cfg = EsgConfig(tau=0.5, max_size=g.n)
query = ids(5)

print("\nlocal search from {5}")
for cap in range(2, 6):
    c = local_search(TOY_SCORES, g, query, EsgConfig(0.5, cap))
    print(f"  cap {cap}: {labels(c.nodes)}  ESG {c.esg:.4f}")

print("\nglobal search, prefix comparisons")
for mid, mid_esg, left, left_esg, lo, hi in global_search_trace(TOY_SCORES, g, cfg):
    print(f"  {labels(mid)} {mid_esg:.3f} vs {labels(left)} {left_esg:.3f} -> window [{lo}, {hi}]")
glo = global_search(TOY_SCORES, g, query, cfg)
print(f"  result {labels(glo.nodes)}  ESG {glo.esg:.4f}  iterations {glo.iterations}")

best = oracle_search(TOY_SCORES, g, query, tau=0.5)
print(f"\nexhaustive optimum {labels(best.nodes)}  ESG {best.esg:.4f}")
print(f"mean score {np.mean(TOY_SCORES):.4f}")
