"""Finite-state (order 1 or 2) tagging models and Viterbi decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..exceptions import InstanceFormatError, NoTagging

NEG_INF = -math.inf
DEFAULT_START = "<s>"


@dataclass(frozen=True)
class TagSequence:
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))

    @property
    def n(self) -> int:
        return len(self.tags)

    def tag_indicator(self, i: int, t: str) -> int:
        return int(1 <= i <= self.n and self.tags[i - 1] == t)

    def bigram_indicator(self, i: int, t1: str, t2: str) -> int:
        return int(1 <= i < self.n and self.tags[i - 1] == t1 and self.tags[i] == t2)

    def bigrams(self) -> set:
        return {(i, self.tags[i - 1], self.tags[i]) for i in range(1, self.n)}


class TagModel:
    """Score of a tag sequence is sum_i trans[(z_{i-m}..z_i)] + emit[(z_i, w_i)].

    Histories before position 1 are padded with ``start``.  Missing transitions
    or emissions score -inf, which forbids the structure.
    """

    def __init__(self, order: int, transitions: Mapping, emissions: Mapping, start: str = DEFAULT_START):
        if order not in (1, 2):
            raise ValueError(f"tagger order must be 1 or 2, got {order}")
        self.order = order
        self.start = start
        self.transitions = {tuple(k): float(v) for k, v in transitions.items()}
        self.emissions = {tuple(k): float(v) for k, v in emissions.items()}
        for key in self.transitions:
            if len(key) != order + 1:
                raise ValueError(f"transition {key} has wrong length for order {order}")
        tags = {t for t, _ in self.emissions}
        tags.update(key[-1] for key in self.transitions)
        tags.discard(start)
        self.tags = tuple(sorted(tags))

    def __repr__(self):
        return f"TagModel(order={self.order}, tags={self.tags})"

    def local_score(self, i: int, history: tuple, t: str, sentence: Sequence[str]) -> float:
        trans = self.transitions.get(history + (t,))
        emit = self.emissions.get((t, sentence[i - 1]))
        if trans is None or emit is None:
            return NEG_INF
        return trans + emit

    def score(self, tags: Sequence[str], sentence: Sequence[str]) -> float:
        """g(z) for the tag sequence ``tags``."""
        history = (self.start,) * self.order
        total = 0.0
        for i, t in enumerate(tags, 1):
            s = self.local_score(i, history, t, sentence)
            if s == NEG_INF:
                return NEG_INF
            total += s
            history = history[1:] + (t,)
        return total

    @classmethod
    def from_text(cls, text: str, path=None) -> "TagModel":
        order = None
        start = DEFAULT_START
        trans, emit = {}, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "ORDER" and len(parts) == 2:
                    order = int(parts[1])
                elif parts[0] == "START" and len(parts) == 2:
                    start = parts[1]
                elif parts[0] == "TRANS" and len(parts) >= 4:
                    trans[tuple(parts[1:-1])] = float(parts[-1])
                elif parts[0] == "EMIT" and len(parts) == 4:
                    emit[(parts[1], parts[2])] = float(parts[3])
                else:
                    raise InstanceFormatError(f"unrecognized tagger line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        if order is None:
            raise InstanceFormatError("missing ORDER line", path)
        try:
            return cls(order, trans, emit, start)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None

    def to_text(self) -> str:
        lines = [f"ORDER {self.order}", f"START {self.start}"]
        lines += [f"TRANS {' '.join(k)} {w!r}" for k, w in sorted(self.transitions.items())]
        lines += [f"EMIT {t} {word} {w!r}" for (t, word), w in sorted(self.emissions.items())]
        return "\n".join(lines) + "\n"


def viterbi_decode(
    model: TagModel,
    sentence: Sequence[str],
    tag_adjust: Mapping | None = None,
    bigram_adjust: Mapping | None = None,
) -> TagSequence:
    """Best sequence under g(z) - sum u(i,t) z(i,t) - sum v(i,t1,t2) z(i,t1,t2).

    Runs the recursion right to left over best-completion scores, then reads
    the sequence off left to right taking the smallest optimal tag at each
    step, which yields the lexicographically smallest optimal sequence.
    """
    n = len(sentence)
    if n == 0:
        raise NoTagging("empty sentence")
    u = tag_adjust or {}
    v = bigram_adjust or {}
    m = model.order
    tags = model.tags

    # completion[i][history] = (best score of positions i..n, best tag at i)
    completion = [None] * (n + 2)
    completion[n + 1] = None

    def histories_at(i):
        # tag histories that can precede position i
        pads = max(m - (i - 1), 0)
        prefix = (model.start,) * pads
        free = m - pads
        if free == 0:
            return [prefix]
        if free == 1:
            return [prefix + (a,) for a in tags]
        return [(a, b) for a in tags for b in tags]

    for i in range(n, 0, -1):
        table = {}
        for h in histories_at(i):
            best, arg = NEG_INF, None
            for t in tags:
                s = model.local_score(i, h, t, sentence)
                if s == NEG_INF:
                    continue
                s -= u.get((i, t), 0.0)
                if i >= 2 and v:
                    s -= v.get((i - 1, h[-1], t), 0.0)
                if i < n:
                    rest = completion[i + 1][h[1:] + (t,)][0]
                    if rest == NEG_INF:
                        continue
                    s += rest
                if arg is None or s > best:
                    best, arg = s, t
            table[h] = (best, arg)
        completion[i] = table

    h = (model.start,) * m
    if completion[1][h][1] is None:
        raise NoTagging(f"no finite-score tag sequence for {' '.join(sentence)!r}")
    out = []
    for i in range(1, n + 1):
        t = completion[i][h][1]
        out.append(t)
        h = h[1:] + (t,)
    return TagSequence(tuple(out))
