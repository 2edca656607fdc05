"""Watch the subgradient method cycle on the two-word toy.

The parser and the tagger each have three candidate structures.  The only
agreeing pair is (y3, z3), scored 0, but the relaxation can average the two
disagreeing pairs (y1, z1) and (y2, z2) to a dual of 2.  The iterates
bounce between those two pairs until the stall detector stops the run.
"""

import numpy as np

from lagrelax.core import StepSizeSchedule
from lagrelax.parsetag import dd_parse_tag, toy

grammar, tagger, sentence = toy.toy_instance()
trace = dd_parse_tag(grammar, tagger, sentence, StepSizeSchedule("adaptive", toy.DEFAULT_C))

print(f"status: {trace.status.value} after {trace.iterations} iterations")
print(f"best dual: {trace.best_dual:.6f}   best primal: {trace.best_primal}")
print()
print(" k   dual      step   pair")
for rec in trace.records[:12]:
    print(f"{rec.k:2d}  {rec.dual:8.4f}  {rec.step_size:5.3f}  {toy.pair_names(rec.structure)}")

# the two multipliers that matter: u(1, a) and u(1, b)
path = np.array([[rec.multipliers.get(("tag", 1, t), 0.0) for t in "ab"] for rec in trace.records])
print()
print("u(1,a), u(1,b) over the last five iterations:")
print(np.round(path[-5:], 4))

# a constant small step does not shrink, so the raw dual goes up and down
const = dd_parse_tag(grammar, tagger, sentence, StepSizeSchedule("constant", 0.01), max_iters=200)
rises = int(np.sum(np.diff(const.duals()) > 0))
print()
print(f"constant step 0.01: {rises} dual increases, best dual {const.best_dual:.4f}")
