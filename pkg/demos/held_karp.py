"""Held-Karp bounds for small travelling salesman instances.

Tours here maximise total edge weight.  A 1-tree is a spanning tree on
vertices 2..n plus two edges at vertex 1.  Every tour is a 1-tree, so the
best 1-tree under vertex penalties bounds the best tour from above.  When
the best 1-tree has every degree equal to two it is itself a tour, and the
bound is tight.
"""

from lagrelax.core import StepSizeSchedule
from lagrelax.generate import tsp_instance
from lagrelax.oracles import brute_tsp
from lagrelax.tsp import best_one_tree, hk_relaxation

print("seed  n  status       iters   bound   optimum")
for seed in range(8):
    graph = tsp_instance(seed, n=5 + seed % 4)
    trace = hk_relaxation(graph, StepSizeSchedule("adaptive", 1.0))
    tour, weight = brute_tsp(graph)
    print(f"{seed:4d} {graph.n:2d}  {trace.status.value:12s} {trace.iterations:5d}"
          f"  {trace.best_dual:6.1f}   {weight:6.1f}")

# without penalties the 1-tree usually has a vertex of degree three
graph = tsp_instance(3, n=8)
tree = best_one_tree(graph)
print()
print("unpenalised 1-tree degree residuals:", tree.residuals(graph.n))
