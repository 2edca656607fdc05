"""Lagrangian relaxation for phrase-based translation decoding.

The hard constraint "every source word is translated exactly once" is
relaxed to "exactly n source words are translated in total", which a DP
over (words translated so far, last target word) solves exactly.  Per-word
multipliers push the relaxed derivations back towards exact covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import (
    DEFAULT_STALL_EPS,
    DEFAULT_STALL_WINDOW,
    OracleResult,
    RunTrace,
    StepSizeSchedule,
    run_subgradient,
)
from .exceptions import InfeasibleError, InstanceFormatError

NEG_INF = -math.inf
DEFAULT_FLOOR = -20.0
DEFAULT_START = "<s>"


@dataclass(frozen=True)
class Phrase:
    s: int
    t: int
    words: tuple
    score: float

    @property
    def length(self) -> int:
        return self.t - self.s + 1


class PhraseLexicon:
    def __init__(self, n: int, phrases: Sequence[Phrase]):
        self.n = int(n)
        self.phrases = tuple(
            Phrase(int(p.s), int(p.t), tuple(p.words), float(p.score)) for p in phrases
        )
        for p in self.phrases:
            if not 1 <= p.s <= p.t <= self.n:
                raise ValueError(f"phrase span ({p.s}, {p.t}) outside 1..{self.n}")
            if not p.words:
                raise ValueError(f"phrase ({p.s}, {p.t}) has an empty target side")
            if not math.isfinite(p.score):
                raise ValueError(f"non-finite score on phrase ({p.s}, {p.t})")
        covered = {i for p in self.phrases for i in range(p.s, p.t + 1)}
        missing = sorted(set(range(1, self.n + 1)) - covered)
        if missing:
            raise ValueError(f"source positions {missing} are not covered by any phrase")

    def __len__(self):
        return len(self.phrases)

    @classmethod
    def from_text(cls, text: str, path=None) -> "PhraseLexicon":
        n = None
        phrases = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "N" and len(parts) == 2:
                    n = int(parts[1])
                elif parts[0] == "PHRASE" and len(parts) >= 5:
                    phrases.append(Phrase(int(parts[1]), int(parts[2]), tuple(parts[4:]), float(parts[3])))
                else:
                    raise InstanceFormatError(f"unrecognized phrase-table line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        if n is None:
            n = max((p.t for p in phrases), default=0)
        try:
            return cls(n, phrases)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None

    def to_text(self) -> str:
        lines = [f"N {self.n}"]
        lines += [f"PHRASE {p.s} {p.t} {p.score!r} {' '.join(p.words)}" for p in self.phrases]
        return "\n".join(lines) + "\n"


class BigramLM:
    """Bigram scores with a finite floor for unseen pairs."""

    def __init__(self, scores: Mapping, start: str = DEFAULT_START, floor: float = DEFAULT_FLOOR):
        self.scores = {tuple(k): float(v) for k, v in scores.items()}
        self.start = start
        self.floor = float(floor)
        if not math.isfinite(self.floor):
            raise ValueError("LM floor must be finite")

    def __call__(self, prev: str, word: str) -> float:
        return self.scores.get((prev, word), self.floor)

    def sequence_score(self, words: Sequence[str]) -> float:
        total = 0.0
        prev = self.start
        for w in words:
            total += self(prev, w)
            prev = w
        return total

    @classmethod
    def from_text(cls, text: str, path=None) -> "BigramLM":
        scores = {}
        start, floor = DEFAULT_START, DEFAULT_FLOOR
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "LM" and len(parts) == 4:
                    scores[(parts[1], parts[2])] = float(parts[3])
                elif parts[0] == "START" and len(parts) == 2:
                    start = parts[1]
                elif parts[0] == "FLOOR" and len(parts) == 2:
                    floor = float(parts[1])
                else:
                    raise InstanceFormatError(f"unrecognized LM line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        try:
            return cls(scores, start, floor)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None

    def to_text(self) -> str:
        lines = [f"START {self.start}", f"FLOOR {self.floor!r}"]
        lines += [f"LM {a} {b} {w!r}" for (a, b), w in sorted(self.scores.items())]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Derivation:
    """An ordered sequence of phrase indices into a lexicon."""

    indices: tuple
    lexicon: PhraseLexicon

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))

    def __eq__(self, other):
        return isinstance(other, Derivation) and self.indices == other.indices

    def __hash__(self):
        return hash(self.indices)

    def __repr__(self):
        spans = ", ".join(f"({p.s},{p.t},{' '.join(p.words)!r})" for p in self.phrases)
        return f"Derivation[{spans}]"

    @property
    def phrases(self) -> tuple:
        return tuple(self.lexicon.phrases[k] for k in self.indices)

    def translation(self) -> tuple:
        return tuple(w for p in self.phrases for w in p.words)

    def counts(self) -> dict:
        """y(i): how many times source word i is translated."""
        out = {i: 0 for i in range(1, self.lexicon.n + 1)}
        for p in self.phrases:
            for i in range(p.s, p.t + 1):
                out[i] += 1
        return out

    def total_count(self) -> int:
        return sum(p.length for p in self.phrases)

    def in_relaxed_set(self) -> bool:
        """Membership in Y': exactly n source words translated in total."""
        return len(self.indices) >= 1 and self.total_count() == self.lexicon.n

    def is_exact_cover(self) -> bool:
        return all(c == 1 for c in self.counts().values())

    def score(self, lm: BigramLM) -> float:
        """h(y) = LM score of the translation + sum of phrase scores."""
        return lm.sequence_score(self.translation()) + math.fsum(p.score for p in self.phrases)


def _phrase_lm(lm: BigramLM, prev: str, words: tuple) -> float:
    total = lm(prev, words[0])
    for a, b in zip(words, words[1:]):
        total += lm(a, b)
    return total


def relaxed_decode(lexicon: PhraseLexicon, lm: BigramLM, u: Mapping | None = None) -> Derivation:
    """Best derivation translating exactly n source words in total.

    Phrase scores are adjusted to theta(p) + sum_{i=s..t} u(i).  The DP runs
    over best completions from (count, last word), and the derivation is read
    forward taking the lowest-index optimal phrase at each step, giving the
    lexicographically smallest optimal index sequence.
    """
    u = u or {}
    n = lexicon.n
    phrases = lexicon.phrases
    adjusted = [p.score + math.fsum(u.get(i, 0.0) for i in range(p.s, p.t + 1)) for p in phrases]
    memo: dict = {}

    def completion(count: int, last: str):
        key = (count, last)
        if key in memo:
            return memo[key]
        if count == n:
            memo[key] = (0.0, None)
            return memo[key]
        best, arg = NEG_INF, None
        for k, p in enumerate(phrases):
            if count + p.length > n:
                continue
            rest = completion(count + p.length, p.words[-1])[0]
            if rest == NEG_INF:
                continue
            val = _phrase_lm(lm, last, p.words) + adjusted[k] + rest
            if arg is None or val > best:
                best, arg = val, k
        memo[key] = (best, arg)
        return memo[key]

    if n == 0 or completion(0, lm.start)[1] is None:
        raise InfeasibleError("no phrase sequence translates exactly n source words")
    out = []
    count, last = 0, lm.start
    while count < n:
        k = memo[(count, last)][1]
        out.append(k)
        count += phrases[k].length
        last = phrases[k].words[-1]
    return Derivation(tuple(out), lexicon)


class PhraseBackend:
    """Constraint ids are source positions; residual is y(i) - 1."""

    def __init__(self, lexicon: PhraseLexicon, lm: BigramLM):
        self.lexicon = lexicon
        self.lm = lm

    def describe(self) -> dict:
        return {"problem": "phrase", "n": self.lexicon.n, "phrases": len(self.lexicon)}

    def lagrangian(self, u, y: Derivation) -> float:
        counts = y.counts()
        return y.score(self.lm) + math.fsum(u.get(i, 0.0) * (c - 1) for i, c in sorted(counts.items()))

    def oracle(self, u) -> OracleResult:
        y = relaxed_decode(self.lexicon, self.lm, u)
        gamma = {i: float(c - 1) for i, c in y.counts().items()}
        return OracleResult(y, self.lagrangian(u, y), gamma)

    def primalize(self, y: Derivation):
        if not y.is_exact_cover():
            return None
        return y, y.score(self.lm)


def dd_phrase(lexicon: PhraseLexicon, lm: BigramLM, schedule: StepSizeSchedule, max_iters: int = 500,
              stall_window: int = DEFAULT_STALL_WINDOW, stall_eps: float = DEFAULT_STALL_EPS) -> RunTrace:
    return run_subgradient(PhraseBackend(lexicon, lm), schedule, max_iters, stall_window, stall_eps)
