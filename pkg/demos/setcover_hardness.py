"""Why exact search is hard: a set-cover instance encoded as a search problem.

Elements and an apex form the query; every set is a node linking its
elements to the apex. With tau = 1 the best connected community pulls in
as few set nodes as possible, i.e. a minimum set cover.
"""

import itertools

from zerocs.identify import gadget_chosen_sets, oracle_search, setcover_gadget

universe = 4
sets = [[0], [1, 3], [0, 2], [1, 2], [3]]

g, s, query = setcover_gadget(universe, sets)
print(f"gadget: {g.n} nodes, {g.m} edges, apex degree {g.degrees[-1]}")
print(f"query (elements + apex): {query.tolist()}")

best = oracle_search(s, g, query, tau=1.0)
chosen = gadget_chosen_sets(best, universe, len(sets))
print(f"optimal community: {best.nodes.tolist()}  ESG {best.esg:.5f}")
print("sets pulled in:", [sets[j] for j in chosen])

for r in range(1, len(sets) + 1):
    covers = [c for c in itertools.combinations(range(len(sets)), r)
              if set().union(*(sets[j] for j in c)) == set(range(universe))]
    if covers:
        print(f"minimum covers by enumeration (size {r}):", covers)
        break
