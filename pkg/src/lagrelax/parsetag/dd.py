"""Dual decomposition for joint parsing and tagging, with bigram tightening."""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, NamedTuple, Sequence

from ..core import (
    DEFAULT_STALL_EPS,
    DEFAULT_STALL_WINDOW,
    OracleResult,
    RunTrace,
    Status,
    StepSizeSchedule,
    run_subgradient,
)
from ..exceptions import CapExceeded, PreconditionError
from .grammar import Grammar, ParseTree, cky_decode, count_derivations, iter_derivations
from .tagger import NEG_INF, TagModel, TagSequence, viterbi_decode

DEFAULT_ENUMERATION_CAP = 100_000


class ParseTagPair(NamedTuple):
    parse: ParseTree
    tagging: TagSequence


def _parse_objective(tree: ParseTree, f_value: float, tag_adjust, bigram_adjust) -> float:
    total = f_value
    for i, t in enumerate(tree.tags, 1):
        total += tag_adjust.get((i, t), 0.0)
    if bigram_adjust:
        for b in sorted(tree.bigrams()):
            total += bigram_adjust.get(b, 0.0)
    return total


def tightened_parse_oracle(
    grammar: Grammar,
    sentence: Sequence[str],
    tag_adjust=None,
    bigram_adjust=None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    _cache: dict | None = None,
) -> ParseTree:
    """Exact argmax of f(y) + sum u(i,t) y(i,t) + sum v(i,t1,t2) y(i,t1,t2).

    Solved by enumerating every derivation, so only usable when the sentence
    has at most ``enumeration_cap`` derivations.
    """
    tag_adjust = tag_adjust or {}
    bigram_adjust = bigram_adjust or {}
    if _cache is not None and "trees" in _cache:
        scored = _cache["trees"]
    else:
        count = count_derivations(grammar, sentence)
        if count > enumeration_cap:
            raise CapExceeded(
                f"sentence has {count} derivations, above the cap of {enumeration_cap}; "
                "raise the cap or run without bigram constraints"
            )
        scored = [(tree, tree.score(grammar)) for tree in iter_derivations(grammar, sentence)]
        if _cache is not None:
            _cache["trees"] = scored
    if not scored:
        # fall back to CKY for the error message
        return cky_decode(grammar, sentence, tag_adjust)
    best_tree, best_val = None, NEG_INF
    for tree, f_value in scored:
        val = _parse_objective(tree, f_value, tag_adjust, bigram_adjust)
        if (best_tree is None or val > best_val
                or (val == best_val and tree.sort_key() < best_tree.sort_key())):
            best_tree, best_val = tree, val
    return best_tree


class ParseTagBackend:
    """Relaxation backend enforcing y(i,t) = z(i,t), and optionally
    y(i,t1,t2) = z(i,t1,t2) for a selected set of bigram triples.

    Constraint ids are ``("tag", i, t)`` and ``("bigram", i, t1, t2)``.
    """

    def __init__(self, grammar: Grammar, model: TagModel, sentence: Sequence[str],
                 bigram_constraints: Iterable = (), enumeration_cap: int = DEFAULT_ENUMERATION_CAP):
        self.grammar = grammar
        self.model = model
        self.sentence = tuple(sentence)
        self.bigram_constraints = tuple(sorted(set(tuple(b) for b in bigram_constraints)))
        n = len(self.sentence)
        for i, t1, t2 in self.bigram_constraints:
            if not 1 <= i < n:
                raise PreconditionError(f"bigram constraint position {i} outside 1..{n - 1}")
        self.enumeration_cap = enumeration_cap
        self.tag_set = tuple(sorted(set(grammar.tags) | set(model.tags)))
        self._cache: dict = {}

    def describe(self) -> dict:
        return {
            "problem": "parse-tag",
            "n": len(self.sentence),
            "sentence": " ".join(self.sentence),
            "tags": list(self.tag_set),
            "order": self.model.order,
            "bigram_constraints": [list(b) for b in self.bigram_constraints],
        }

    def split_multipliers(self, u):
        tag_adjust, bigram_adjust = {}, {}
        for key, val in u.items():
            if key[0] == "tag":
                tag_adjust[(key[1], key[2])] = val
            elif key[0] == "bigram":
                bigram_adjust[(key[1], key[2], key[3])] = val
        return tag_adjust, bigram_adjust

    def decode(self, u) -> ParseTagPair:
        tag_adjust, bigram_adjust = self.split_multipliers(u)
        if self.bigram_constraints:
            active = {b: bigram_adjust.get(b, 0.0) for b in self.bigram_constraints}
            y = tightened_parse_oracle(self.grammar, self.sentence, tag_adjust, active,
                                       self.enumeration_cap, self._cache)
        else:
            active = {}
            y = cky_decode(self.grammar, self.sentence, tag_adjust)
        z = viterbi_decode(self.model, self.sentence, tag_adjust, active)
        return ParseTagPair(y, z)

    def lagrangian(self, u, pair: ParseTagPair) -> float:
        tag_adjust, bigram_adjust = self.split_multipliers(u)
        active = {b: bigram_adjust.get(b, 0.0) for b in self.bigram_constraints}
        y, z = pair
        parse_part = _parse_objective(y, y.score(self.grammar), tag_adjust, active)
        tag_part = self.model.score(z.tags, self.sentence)
        for i, t in enumerate(z.tags, 1):
            tag_part -= tag_adjust.get((i, t), 0.0)
        for b in sorted(z.bigrams()):
            tag_part -= active.get(b, 0.0)
        return parse_part + tag_part

    def residuals(self, pair: ParseTagPair) -> dict:
        y, z = pair
        n = len(self.sentence)
        gamma = {}
        for i in range(1, n + 1):
            for t in self.tag_set:
                gamma[("tag", i, t)] = float(y.tag_indicator(i, t) - z.tag_indicator(i, t))
        for (i, t1, t2) in self.bigram_constraints:
            gamma[("bigram", i, t1, t2)] = float(y.bigram_indicator(i, t1, t2) - z.bigram_indicator(i, t1, t2))
        return gamma

    def oracle(self, u) -> OracleResult:
        pair = self.decode(u)
        return OracleResult(pair, self.lagrangian(u, pair), self.residuals(pair))

    def primalize(self, pair: ParseTagPair):
        y = pair[0]
        g = self.model.score(y.tags, self.sentence)
        if g == NEG_INF:
            return None
        return ParseTagPair(y, TagSequence(y.tags)), y.score(self.grammar) + g


def select_tightening_constraints(trace: RunTrace, window: int = 20, top_k: int = 2) -> list:
    """Bigram triples (i, t1, t2) on which y and z disagreed most often over
    the last ``window`` iterations, most frequent first, ties lexicographic."""
    if window < 1 or len(trace.records) < window:
        raise PreconditionError(f"trace has {len(trace.records)} iterations, need at least {window}")
    counts = Counter()
    for record in trace.records[-window:]:
        y, z = record.structure
        counts.update(y.bigrams() ^ z.bigrams())
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [triple for triple, _ in ranked[:top_k]]


def dd_parse_tag(
    grammar: Grammar,
    model: TagModel,
    sentence: Sequence[str],
    schedule: StepSizeSchedule,
    max_iters: int = 500,
    tighten: bool = False,
    bigram_constraints: Iterable | None = None,
    stall_window: int = DEFAULT_STALL_WINDOW,
    stall_eps: float = DEFAULT_STALL_EPS,
    select_window: int = 20,
    select_top_k: int = 2,
    max_rounds: int = 3,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> RunTrace:
    """Run dual decomposition for the parse/tag problem.

    With explicit ``bigram_constraints`` those triples are enforced from the
    first iteration.  With ``tighten=True`` and no explicit set, an untightened
    run is made first; if it does not e-converge, the most frequently violated
    bigram triples over its last ``select_window`` iterations are added and the
    run is restarted from u = 0, for up to ``max_rounds`` rounds.
    """
    def run(constraints):
        backend = ParseTagBackend(grammar, model, sentence, constraints, enumeration_cap)
        return run_subgradient(backend, schedule, max_iters, stall_window, stall_eps)

    if bigram_constraints is not None:
        return run(bigram_constraints)
    trace = run(())
    if not tighten:
        return trace
    phases = []
    active: list = []
    for _ in range(max_rounds):
        if trace.status is Status.E_CONVERGED:
            break
        window = min(select_window, len(trace.records))
        new = [b for b in select_tightening_constraints(trace, window, select_top_k) if b not in active]
        phases.append({"status": trace.status.value, "iterations": trace.iterations,
                       "best_dual": trace.best_dual, "added": [list(b) for b in new]})
        if not new:
            break
        active.extend(new)
        trace = run(active)
    trace.meta["tightening_rounds"] = phases
    return trace
