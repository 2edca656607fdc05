"""Seeded random instance generators.

Every generator draws from ``numpy.random.default_rng(seed)`` in a fixed
order, so a seed always reproduces the same instance.  Scores are multiples
of 1/2 (integers for TSP) so that sums of scores are exact in floating point
and ties between structures are real ties rather than rounding noise.

Algorithms
----------
parse-tag
    Tags ``t0..t{T-1}``, nonterminals ``S`` plus ``extra_nonterminals``
    symbols ``X1..``.  A backbone of rules ``S -> t S`` and ``S -> t t'`` for
    all tags guarantees every sentence parses.  Each other rule
    ``X -> Y Z`` is added with probability ``rule_prob``.  The sentence draws
    ``n`` words from a vocabulary of ``vocab`` words, and each word licenses
    one or two random tags.  The tagger is order 1 with every transition
    present and emissions on the same (tag, word) support as the grammar.
    Rule, lexical, transition and emission weights are uniform on
    {-1, -1/2, 0, 1/2, 1}.  If the sentence has more than ``max_derivations``
    derivations the draw is repeated.
mrf
    A ``rows x cols`` grid.  Each edge table draws its four entries uniformly
    from {-1, -1/2, ..., 1} and then adds ``coupling`` (default 1) to the two
    agreeing entries, which favours (but does not force) smooth labellings.
tsp
    Complete graph on ``n`` vertices with integer scores uniform on
    [low, high].
phrase
    Source length ``n``.  Every position gets a one-word phrase, and
    ``extra`` further spans of length 2 or 3 are drawn; each phrase has one
    or two target words from a vocabulary of ``vocab`` words.  Phrase scores
    are uniform on {-1, ..., 1} in steps of 1/2.  The LM scores a random
    half of all word pairs (with the start token) uniformly on {-2, ..., 0}
    in steps of 1/2; other pairs get the floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mrf import PairwiseMRF, grid_cover, grid_edges
from .parsetag.grammar import Grammar, count_derivations
from .parsetag.tagger import DEFAULT_START, TagModel
from .phrase import BigramLM, Phrase, PhraseLexicon
from .tsp import WeightedGraph

HALVES = np.arange(-2, 3) / 2.0


def _half(rng, size=None):
    return rng.choice(HALVES, size=size)


@dataclass
class ParseTagInstance:
    grammar: Grammar
    model: TagModel
    sentence: tuple


def parse_tag_instance(seed: int, n: int = 5, tags: int = 3, vocab: int = 4, extra_nonterminals: int = 1,
                       rule_prob: float = 0.3, max_derivations: int = 2000, max_attempts: int = 100
                       ) -> ParseTagInstance:
    if n < 2:
        raise ValueError("parse-tag instances need n >= 2")
    if tags < 1 or vocab < 1:
        raise ValueError("need at least one tag and one word")
    rng = np.random.default_rng(seed)
    tag_names = [f"t{k}" for k in range(tags)]
    nts = ["S"] + [f"X{k}" for k in range(1, extra_nonterminals + 1)]
    symbols = nts + tag_names
    for _ in range(max_attempts):
        binary = {}
        for a in tag_names:
            binary[("S", a, "S")] = float(_half(rng))
            for b in tag_names:
                binary[("S", a, b)] = float(_half(rng))
        for x in nts:
            for y in symbols:
                for z in symbols:
                    if (x, y, z) not in binary and rng.random() < rule_prob:
                        binary[(x, y, z)] = float(_half(rng))
        words = [f"w{k}" for k in range(vocab)]
        licensed = {}
        for w in words:
            k = int(rng.integers(1, min(2, tags) + 1))
            licensed[w] = sorted(rng.choice(tag_names, size=k, replace=False).tolist())
        lexical = {(t, w): float(_half(rng)) for w in words for t in licensed[w]}
        sentence = tuple(rng.choice(words, size=n).tolist())
        transitions = {(p, t): float(_half(rng)) for p in [DEFAULT_START] + tag_names for t in tag_names}
        emissions = {(t, w): float(_half(rng)) for w in words for t in licensed[w]}
        grammar = Grammar("S", binary, lexical)
        if count_derivations(grammar, sentence) <= max_derivations:
            return ParseTagInstance(grammar, TagModel(1, transitions, emissions, DEFAULT_START), sentence)
    raise RuntimeError(f"no instance with <= {max_derivations} derivations after {max_attempts} draws")


def mrf_grid_instance(seed: int, rows: int = 3, cols: int = 3, coupling: float = 1.0) -> tuple:
    """(PairwiseMRF, TreeCover) on a grid with the horizontal/vertical cover."""
    rng = np.random.default_rng(seed)
    pots = {}
    for e in grid_edges(rows, cols):
        table = _half(rng, size=(2, 2))
        table[0, 0] += coupling
        table[1, 1] += coupling
        pots[e] = table
    return PairwiseMRF(rows * cols, pots, grid=(rows, cols)), grid_cover(rows, cols)


def tsp_instance(seed: int, n: int = 6, low: int = 0, high: int = 20) -> WeightedGraph:
    return WeightedGraph.complete(n, seed, low, high)


@dataclass
class PhraseInstance:
    lexicon: PhraseLexicon
    lm: BigramLM


def phrase_instance(seed: int, n: int = 4, extra: int = 3, vocab: int = 4) -> PhraseInstance:
    if n < 1:
        raise ValueError("phrase instances need n >= 1")
    rng = np.random.default_rng(seed)
    words = [f"e{k}" for k in range(vocab)]

    def target():
        return tuple(rng.choice(words, size=int(rng.integers(1, 3))).tolist())

    phrases = [Phrase(i, i, target(), float(_half(rng))) for i in range(1, n + 1)]
    for _ in range(extra if n >= 2 else 0):
        length = int(rng.integers(2, min(3, n) + 1))
        s = int(rng.integers(1, n - length + 2))
        phrases.append(Phrase(s, s + length - 1, target(), float(_half(rng))))
    scores = {}
    for a in [DEFAULT_START] + words:
        for b in words:
            if rng.random() < 0.5:
                scores[(a, b)] = float(rng.choice(np.arange(-4, 1) / 2.0))
    return PhraseInstance(PhraseLexicon(n, phrases), BigramLM(scores, DEFAULT_START))
