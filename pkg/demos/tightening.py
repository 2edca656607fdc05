"""Break the toy cycle by adding bigram agreement constraints.

Requiring the parse and the tagging to agree on the bigram (1, a, b) rules out
the averaging that kept the dual at 2.  With it the run reaches an agreeing
pair and proves that (y3, z3) is optimal.  The automatic mode looks at which
bigrams disagreed most often over the stalled run and adds those instead.
"""

from lagrelax.core import StepSizeSchedule
from lagrelax.parsetag import dd_parse_tag, toy

grammar, tagger, sentence = toy.toy_instance()
schedule = StepSizeSchedule("adaptive", toy.DEFAULT_C)

manual = dd_parse_tag(grammar, tagger, sentence, schedule, bigram_constraints=[toy.TIGHTENING_CONSTRAINT])
print("hand-picked constraint", toy.TIGHTENING_CONSTRAINT)
print(f"  status {manual.status.value} at k={manual.converged_iteration}")
print(f"  certificate {toy.pair_names(manual.certificate)} with value {manual.certificate_value}")

auto = dd_parse_tag(grammar, tagger, sentence, schedule, tighten=True)
print("automatic tightening")
print(f"  constraints added: {auto.meta['bigram_constraints']}")
print(f"  status {auto.status.value} at k={auto.converged_iteration}")
print(f"  certificate {toy.pair_names(auto.certificate)} with value {auto.certificate_value}")
