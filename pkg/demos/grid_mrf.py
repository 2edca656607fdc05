"""MAP inference on a small binary grid by splitting it into two forests.

Horizontal chains go to one forest and vertical chains to the other.  Each
forest is solved exactly by max-product and the multipliers push the two
copies of every vertex towards the same label.
"""

import numpy as np

from lagrelax.core import StepSizeSchedule
from lagrelax.generate import mrf_grid_instance
from lagrelax.mrf import dd_mrf_map
from lagrelax.oracles import brute_mrf_map

rows, cols = 3, 4
for seed in range(5):
    mrf, cover = mrf_grid_instance(seed, rows, cols)
    trace = dd_mrf_map(mrf, cover, StepSizeSchedule("adaptive", 1.0))
    y_best, best = brute_mrf_map(mrf)
    line = f"seed {seed}: {trace.status.value:12s} k={trace.iterations:3d}  bound {trace.best_dual:7.3f}  optimum {best:6.2f}"
    if trace.certified:
        line += f"  certificate matches: {tuple(trace.certificate) == tuple(y_best)}"
    print(line)

mrf, cover = mrf_grid_instance(0, rows, cols)
trace = dd_mrf_map(mrf, cover, StepSizeSchedule("adaptive", 1.0))
print()
print("certified labelling for seed 0:")
print(np.array(trace.certificate).reshape(rows, cols) if trace.certified else "none")
print("disagreeing vertices per iteration (seed 0):")
print([rec.violation_count for rec in trace.records])
