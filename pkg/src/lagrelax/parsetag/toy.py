"""Built-in two-word instance with a fractional LP optimum.

Three trees y1=(a,b), y2=(b,a), y3=(c,c) score f = [1, 1, 2] and three tag
sequences z1=(a,a), z2=(b,b), z3=(c,c) score g = [1, 1, -2].  The only
agreeing pair is (y3, z3) with value 0, while the uniform mixture of
{y1, y2} and {z1, z2} matches every tag marginal and scores 2, so the dual
bottoms out at 2.  Enforcing y(1,a,b) = z(1,a,b) removes that mixture.
"""

from __future__ import annotations

import itertools

from .grammar import Grammar
from .tagger import TagModel

SENTENCE = ("w1", "w2")
PARSE_TAGS = {"y1": ("a", "b"), "y2": ("b", "a"), "y3": ("c", "c")}
TAG_SEQUENCES = {"z1": ("a", "a"), "z2": ("b", "b"), "z3": ("c", "c")}
F_SCORES = (1.0, 1.0, 2.0)
G_SCORES = (1.0, 1.0, -2.0)
TIGHTENING_CONSTRAINT = (1, "a", "b")

# step constant for the adaptive schedule that settles into the y1/z1, y2/z2 oscillation
DEFAULT_C = 1.8


def _expectations(weights, structures):
    out = {}
    for w, tags in zip(weights, structures):
        for i, t in enumerate(tags, 1):
            out[(i, t)] = out.get((i, t), 0.0) + w
    return out


def validate_structures() -> None:
    """Check the tag assignment against the integral and fractional marginals.

    (alpha1, beta1) = ([0,0,1], [0,0,1]) puts mass 1 on (i, c) at both
    positions; (alpha2, beta2) = ([.5,.5,0], [.5,.5,0]) puts 0.5 on (i, a) and
    (i, b) at both positions; both satisfy y-marginals == z-marginals.
    """
    ys = list(PARSE_TAGS.values())
    zs = list(TAG_SEQUENCES.values())
    one = _expectations([0, 0, 1], ys), _expectations([0, 0, 1], zs)
    half = _expectations([0.5, 0.5, 0], ys), _expectations([0.5, 0.5, 0], zs)
    for ey, ez in (one, half):
        keys = set(ey) | set(ez)
        assert all(ey.get(k, 0.0) == ez.get(k, 0.0) for k in keys), (ey, ez)
    for i in (1, 2):
        assert one[0][(i, "c")] == 1.0 and one[1][(i, "c")] == 1.0
        for t in "ab":
            assert half[0][(i, t)] == 0.5 and half[1][(i, t)] == 0.5
    # (y3, z3) is the only agreeing pair
    agreeing = [(a, b) for a, b in itertools.product(ys, zs) if a == b]
    assert agreeing == [(("c", "c"), ("c", "c"))]


def toy_grammar() -> Grammar:
    binary = {("S",) + tags: f for tags, f in zip(PARSE_TAGS.values(), F_SCORES)}
    lexical = {(t, w): 0.0 for t in "abc" for w in SENTENCE}
    return Grammar("S", binary, lexical)


def toy_tagger() -> TagModel:
    start = "<s>"
    transitions = {}
    for tags, g in zip(TAG_SEQUENCES.values(), G_SCORES):
        transitions[(start, tags[0])] = 0.0
        transitions[(tags[0], tags[1])] = g
    emissions = {(t, w): 0.0 for t in "abc" for w in SENTENCE}
    return TagModel(1, transitions, emissions, start)


def toy_instance():
    """(grammar, tagger, sentence) for the built-in example."""
    validate_structures()
    return toy_grammar(), toy_tagger(), SENTENCE


def pair_names(pair) -> tuple:
    """('y1', 'z2')-style labels for a (parse, tagging) pair from this instance."""
    y, z = pair
    y_name = next(k for k, v in PARSE_TAGS.items() if v == tuple(y.tags))
    z_name = next(k for k, v in TAG_SEQUENCES.items() if v == tuple(z.tags))
    return y_name, z_name
