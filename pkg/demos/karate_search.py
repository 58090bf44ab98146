"""Label-free community search on Zachary's karate club.

Pre-trains the encoder without any community labels, embeds every member,
then searches around a three-node query and compares with the two factions.
The link term scores raw dot products, so it is unbounded below and keeps
growing in magnitude while the embeddings stretch out; watch l_k in the log.
"""

import time

import numpy as np

from zerocs.csgphormer import embed_all
from zerocs.datasets import identity_features, karate_communities, karate_graph
from zerocs.identify import EsgConfig, global_search, local_search
from zerocs.metrics import evaluate
from zerocs.pipeline import best_truth
from zerocs.scoring import compute_scores
from zerocs.training import TrainConfig, pretrain

g = karate_graph()
x = identity_features(g.n)
factions = karate_communities()
print(f"karate club: {g.n} members, {g.m} ties, faction sizes {[c.size for c in factions]}")

t0 = time.perf_counter()
params, history = pretrain(g, x, TrainConfig(seed=0))
print(f"pre-trained {len(history.rows)} epochs in {time.perf_counter() - t0:.1f}s")
for epoch, lp, lk, total, _ in history.rows[:: max(1, len(history.rows) // 5)]:
    print(f"  epoch {epoch:3d}  l_p {lp:+.4f}  l_k {lk:+.4f}  total {total:+.4f}")

z_node, _ = embed_all(params, g, x)
query = np.array([1, 9, 19])
s = compute_scores(z_node, query)
top = np.argsort(-s.scores)[:8]
print("\nhighest community scores:", ", ".join(f"{v}:{s.scores[v]:.2f}" for v in top))

truth = factions[best_truth(query, factions)]
cfg = EsgConfig()
for search in (local_search, global_search):
    c = search(s, g, query, cfg)
    m = evaluate([c.nodes], [truth], g.n).means
    print(f"\n{c.method} search: {c.nodes.size} members, connected={c.connected}, ESG {c.esg:.4f}")
    print("  members", c.nodes.tolist())
    print(f"  vs faction: F1 {m['f1']:.3f}  NMI {m['nmi']:.3f}  JAC {m['jac']:.3f}")
