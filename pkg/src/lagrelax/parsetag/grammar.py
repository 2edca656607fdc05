"""Weighted CNF grammars, parse trees and CKY decoding.

Positions are 1-based.  Trees are compared by a fixed lexicographic key so
that every argmax in this package is reproducible: at each binary node the
key is ``(split, left label, right label, key(left), key(right))`` where
``split`` is the last position covered by the left child.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Iterator, Mapping, NamedTuple, Sequence, Union

from ..exceptions import InstanceFormatError, NoParse


class Leaf(NamedTuple):
    tag: str
    position: int
    word: str


class Node(NamedTuple):
    label: str
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Node]


def _label(node: TreeNode) -> str:
    return node.tag if isinstance(node, Leaf) else node.label


def _last(node: TreeNode) -> int:
    while isinstance(node, Node):
        node = node.right
    return node.position


def _key(node: TreeNode) -> tuple:
    if isinstance(node, Leaf):
        return ()
    return (_last(node.left), _label(node.left), _label(node.right), _key(node.left), _key(node.right))


class Grammar:
    """A weighted context-free grammar in Chomsky normal form.

    ``binary`` maps ``(X, Y, Z)`` to the weight of ``X -> Y Z`` and ``lexical``
    maps ``(t, word)`` to the weight of ``t -> word``.  The tag set is the set
    of left-hand sides of lexical rules; tags may not rewrite to binary rules.
    """

    def __init__(self, start: str, binary: Mapping, lexical: Mapping):
        self.start = start
        self.binary = {tuple(k): float(w) for k, w in binary.items()}
        self.lexical = {tuple(k): float(w) for k, w in lexical.items()}
        self.tags = frozenset(t for t, _ in self.lexical)
        symbols = set(self.tags) | {start}
        for x, y, z in self.binary:
            symbols.update((x, y, z))
        self.nonterminals = frozenset(symbols)
        for (x, y, z), w in self.binary.items():
            if x in self.tags:
                raise ValueError(f"tag {x!r} appears on the left of binary rule {x} -> {y} {z}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight for {x} -> {y} {z}")
        for (t, word), w in self.lexical.items():
            if not math.isfinite(w):
                raise ValueError(f"non-finite weight for {t} -> {word}")
        by_lhs = defaultdict(list)
        for (x, y, z), w in sorted(self.binary.items()):
            by_lhs[x].append((y, z, w))
        self._by_lhs = dict(by_lhs)
        lex_by_word = defaultdict(list)
        for (t, word), w in sorted(self.lexical.items()):
            lex_by_word[word].append((t, w))
        self._lex_by_word = dict(lex_by_word)

    def __repr__(self):
        return (f"Grammar(start={self.start!r}, |N|={len(self.nonterminals)}, "
                f"|T|={len(self.tags)}, rules={len(self.binary)}+{len(self.lexical)})")

    def lexical_options(self, word: str) -> list:
        return self._lex_by_word.get(word, [])

    def rules_for(self, lhs: str) -> list:
        return self._by_lhs.get(lhs, [])

    @property
    def left_hand_sides(self) -> list:
        return sorted(self._by_lhs)

    @classmethod
    def from_text(cls, text: str, path=None) -> "Grammar":
        start = None
        binary, lexical = {}, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "RULE" and len(parts) == 5:
                    binary[(parts[1], parts[2], parts[3])] = float(parts[4])
                elif parts[0] == "LEX" and len(parts) == 4:
                    lexical[(parts[1], parts[2])] = float(parts[3])
                elif parts[0] == "START" and len(parts) == 2:
                    start = parts[1]
                else:
                    raise InstanceFormatError(f"unrecognized grammar line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        if start is None:
            raise InstanceFormatError("missing START line", path)
        try:
            return cls(start, binary, lexical)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None

    def to_text(self) -> str:
        lines = [f"START {self.start}"]
        lines += [f"RULE {x} {y} {z} {w!r}" for (x, y, z), w in sorted(self.binary.items())]
        lines += [f"LEX {t} {word} {w!r}" for (t, word), w in sorted(self.lexical.items())]
        return "\n".join(lines) + "\n"


class ParseTree:
    """A derivation of a sentence; exposes the tag and tag-bigram indicators."""

    __slots__ = ("root", "tags", "_key")

    def __init__(self, root: TreeNode):
        self.root = root
        tags = []
        stack = [root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                tags.append(node.tag)
            else:
                stack.append(node.right)
                stack.append(node.left)
        self.tags = tuple(tags)
        self._key = None

    @property
    def n(self) -> int:
        return len(self.tags)

    def __eq__(self, other):
        return isinstance(other, ParseTree) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"ParseTree({self.bracketed()})"

    def sort_key(self) -> tuple:
        if self._key is None:
            self._key = _key(self.root)
        return self._key

    def bracketed(self) -> str:
        def show(node):
            if isinstance(node, Leaf):
                return f"({node.tag} {node.word})"
            return f"({node.label} {show(node.left)} {show(node.right)})"
        return show(self.root)

    def tag_indicator(self, i: int, t: str) -> int:
        return int(1 <= i <= self.n and self.tags[i - 1] == t)

    def bigram_indicator(self, i: int, t1: str, t2: str) -> int:
        return int(1 <= i < self.n and self.tags[i - 1] == t1 and self.tags[i] == t2)

    def bigrams(self) -> set:
        return {(i, self.tags[i - 1], self.tags[i]) for i in range(1, self.n)}

    def rule_counts(self) -> Counter:
        counts = Counter()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Node):
                counts[(node.label, _label(node.left), _label(node.right))] += 1
                stack.extend((node.left, node.right))
        return counts

    def leaves(self) -> list:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def score(self, grammar: Grammar) -> float:
        """f(y): the sum of rule weights in the tree."""
        total = 0.0
        for rule, count in sorted(self.rule_counts().items()):
            total += count * grammar.binary[rule]
        for leaf in self.leaves():
            total += grammar.lexical[(leaf.tag, leaf.word)]
        return total


def cky_decode(grammar: Grammar, sentence: Sequence[str], tag_adjust: Mapping | None = None) -> ParseTree:
    """Best tree under f(y) + sum_{i,t} tag_adjust[(i, t)] * y(i, t).

    Ties are broken towards the smallest tree key (see module docstring).
    """
    n = len(sentence)
    if n == 0:
        raise NoParse("empty sentence")
    adjust = tag_adjust or {}
    # chart[(i, j)] maps label -> (score, backpointer); backpointer is (k, Y, Z) or None
    chart = {}
    for i, word in enumerate(sentence, 1):
        cell = {}
        options = grammar.lexical_options(word)
        if not options:
            raise NoParse(f"word {word!r} at position {i} has no lexical rule")
        for t, w in options:
            cell[t] = (w + adjust.get((i, t), 0.0), None)
        chart[(i, i)] = cell
    lhs_list = grammar.left_hand_sides
    for width in range(2, n + 1):
        for i in range(1, n - width + 2):
            j = i + width - 1
            cell = {}
            for k in range(i, j):
                left = chart[(i, k)]
                right = chart[(k + 1, j)]
                if not left or not right:
                    continue
                for x in lhs_list:
                    best = cell.get(x)
                    for y, z, w in grammar.rules_for(x):
                        ly = left.get(y)
                        if ly is None:
                            continue
                        rz = right.get(z)
                        if rz is None:
                            continue
                        s = w + ly[0] + rz[0]
                        if best is None or s > best[0]:
                            best = (s, (k, y, z))
                    if best is not None:
                        cell[x] = best
            chart[(i, j)] = cell
    if grammar.start not in chart[(1, n)]:
        raise NoParse(f"no derivation of {' '.join(sentence)!r} from {grammar.start!r}")

    def build(i, j, label):
        bp = chart[(i, j)][label][1]
        if bp is None:
            return Leaf(label, i, sentence[i - 1])
        k, y, z = bp
        return Node(label, build(i, k, y), build(k + 1, j, z))

    return ParseTree(build(1, n, grammar.start))


def count_derivations(grammar: Grammar, sentence: Sequence[str]) -> int:
    """Number of distinct derivations of ``sentence`` from the start symbol."""
    n = len(sentence)
    if n == 0:
        return 0
    counts = {}
    for i, word in enumerate(sentence, 1):
        cell = Counter()
        for t, _ in grammar.lexical_options(word):
            cell[t] += 1
        counts[(i, i)] = cell
    for width in range(2, n + 1):
        for i in range(1, n - width + 2):
            j = i + width - 1
            cell = Counter()
            for k in range(i, j):
                left, right = counts[(i, k)], counts[(k + 1, j)]
                for (x, y, z) in grammar.binary:
                    if left[y] and right[z]:
                        cell[x] += left[y] * right[z]
            counts[(i, j)] = cell
    return counts[(1, n)][grammar.start]


def iter_derivations(grammar: Grammar, sentence: Sequence[str]) -> Iterator[ParseTree]:
    """All derivations, built bottom-up from per-span lists of subtrees."""
    n = len(sentence)
    subtrees = {}
    for i, word in enumerate(sentence, 1):
        cell = defaultdict(list)
        for t, _ in grammar.lexical_options(word):
            cell[t].append(Leaf(t, i, word))
        subtrees[(i, i)] = cell
    for width in range(2, n + 1):
        for i in range(1, n - width + 2):
            j = i + width - 1
            cell = defaultdict(list)
            for k in range(i, j):
                left, right = subtrees[(i, k)], subtrees[(k + 1, j)]
                for (x, y, z) in sorted(grammar.binary):
                    for a in left.get(y, ()):
                        for b in right.get(z, ()):
                            cell[x].append(Node(x, a, b))
            subtrees[(i, j)] = cell
    for root in subtrees[(1, n)].get(grammar.start, ()) if n else ():
        yield ParseTree(root)
