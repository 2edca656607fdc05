"""Phrase-based decoding with a relaxed coverage constraint.

The relaxed decoder only insists that the phrases translate n source words in
total.  It may therefore translate one word twice and skip another.  Multipliers on
each source position penalise over-use and reward under-use until the
relaxed derivation is an exact cover.
"""

from lagrelax.core import StepSizeSchedule
from lagrelax.phrase import BigramLM, Phrase, PhraseLexicon, dd_phrase, relaxed_decode
from lagrelax.oracles import brute_phrase

# "das haus ist klein" with one attractive phrase that covers "haus" twice over
lexicon = PhraseLexicon(4, [
    Phrase(1, 1, ("the",), 0.0),
    Phrase(2, 2, ("house",), 0.0),
    Phrase(3, 3, ("is",), 0.0),
    Phrase(4, 4, ("small",), 0.0),
    Phrase(1, 2, ("the", "house"), 1.0),
    Phrase(2, 3, ("house", "is"), 1.5),
    Phrase(3, 4, ("is", "small"), 0.5),
])
lm = BigramLM({("<s>", "the"): 0.0, ("the", "house"): 0.0, ("house", "is"): 0.0, ("is", "small"): 0.0,
               ("house", "house"): -0.5, ("is", "house"): -1.0})

relaxed = relaxed_decode(lexicon, lm)
print("unconstrained relaxed decode:", " ".join(relaxed.translation()))
print("  source counts:", relaxed.counts())

trace = dd_phrase(lexicon, lm, StepSizeSchedule("adaptive", 1.0))
print(f"subgradient: {trace.status.value} at k={trace.converged_iteration}")
if trace.certified:
    print("  translation:", " ".join(trace.certificate.translation()), " score", trace.certificate_value)

best, value = brute_phrase(lexicon, lm, "exactCover")
print("exhaustive search:", " ".join(best.translation()), " score", value)
