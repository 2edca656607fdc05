"""Exhaustive reference solvers for desk-scale instances.

None of these reuse the decoders in the backend modules; they enumerate the
feasible set directly and keep the first maximizer in a documented order.
Comparing a decoder against its oracle is therefore a genuine check.

Tie-breaks:

* parses: smallest ``ParseTree.sort_key()``
* tag sequences and MRF assignments: lexicographically first
* tours: fixed start at vertex 1, reversal removed by requiring the second
  vertex to be smaller than the last, first permutation in lexicographic order
* 1-trees: smallest sorted tuple of edge ranks, where an edge's rank is
  ``(-adjusted score, edge index)``
* phrase derivations: lexicographically smallest phrase-index tuple
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import BudgetExceeded, NoFeasiblePair, PreconditionError
from .mrf import PairwiseMRF
from .parsetag.grammar import Grammar, Leaf, Node, ParseTree
from .parsetag.tagger import NEG_INF, TagModel, TagSequence
from .phrase import BigramLM, Derivation, PhraseLexicon
from .tsp import OneTree, Tour, WeightedGraph

MAX_MRF_VARS = 20
MAX_TSP_VERTICES = 9
MAX_PHRASE_LENGTH = 6
MAX_PHRASES = 8


@dataclass(frozen=True)
class EnumerationBudget:
    max_structures: int = 10**6

    def __post_init__(self):
        if self.max_structures < 1:
            raise ValueError("enumeration budget must be positive")


# ---------------------------------------------------------------- parsing

def enumerate_parses(grammar: Grammar, sentence: Sequence[str],
                     budget: EnumerationBudget = EnumerationBudget()) -> list:
    """Every derivation of ``sentence``, by top-down recursive expansion."""
    sentence = tuple(sentence)
    n = len(sentence)
    memo: dict = {}

    def expand(label, i, j):
        key = (label, i, j)
        if key in memo:
            return memo[key]
        out = []
        if i == j:
            if (label, sentence[i - 1]) in grammar.lexical:
                out.append(Leaf(label, i, sentence[i - 1]))
        else:
            for (x, y, z) in sorted(grammar.binary):
                if x != label:
                    continue
                for k in range(i, j):
                    lefts = expand(y, i, k)
                    if not lefts:
                        continue
                    rights = expand(z, k + 1, j)
                    for a in lefts:
                        for b in rights:
                            out.append(Node(x, a, b))
                            if len(out) > budget.max_structures:
                                raise BudgetExceeded(
                                    f"more than {budget.max_structures} subtrees for {label} over {i}..{j}")
        memo[key] = out
        return out

    if n == 0:
        return []
    return [ParseTree(root) for root in expand(grammar.start, 1, n)]


def _tree_score(grammar: Grammar, node) -> float:
    if isinstance(node, Leaf):
        return grammar.lexical[(node.tag, node.word)]
    head = grammar.binary[(node.label, _root_label(node.left), _root_label(node.right))]
    return head + _tree_score(grammar, node.left) + _tree_score(grammar, node.right)


def _root_label(node) -> str:
    return node.tag if isinstance(node, Leaf) else node.label


def brute_parse(grammar: Grammar, sentence: Sequence[str], tag_adjust: Mapping | None = None,
                budget: EnumerationBudget = EnumerationBudget()) -> tuple:
    """(tree, value) maximizing f(y) + sum u(i,t) y(i,t)."""
    adjust = tag_adjust or {}
    best = None
    for tree in enumerate_parses(grammar, sentence, budget):
        val = _tree_score(grammar, tree.root) + sum(adjust.get((i, t), 0.0) for i, t in enumerate(tree.tags, 1))
        if best is None or val > best[1] or (val == best[1] and tree.sort_key() < best[0].sort_key()):
            best = (tree, val)
    if best is None:
        raise NoFeasiblePair("sentence has no parse")
    return best


def _tag_value(model: TagModel, tags, sentence, tag_adjust, bigram_adjust) -> float:
    history = (model.start,) * model.order
    total = 0.0
    for i, t in enumerate(tags, 1):
        trans = model.transitions.get(history + (t,))
        emit = model.emissions.get((t, sentence[i - 1]))
        if trans is None or emit is None:
            return NEG_INF
        total += trans + emit - tag_adjust.get((i, t), 0.0)
        if i >= 2:
            total -= bigram_adjust.get((i - 1, tags[i - 2], t), 0.0)
        history = history[1:] + (t,)
    return total


def brute_tag_sequences(model: TagModel, sentence: Sequence[str], tag_adjust: Mapping | None = None,
                        bigram_adjust: Mapping | None = None,
                        budget: EnumerationBudget = EnumerationBudget()) -> tuple:
    """(TagSequence, value) maximizing g(z) - sum u z(i,t) - sum v z(i,t1,t2)."""
    sentence = tuple(sentence)
    count = len(model.tags) ** len(sentence)
    if count > budget.max_structures:
        raise BudgetExceeded(f"{count} tag sequences exceed the budget of {budget.max_structures}")
    u, v = tag_adjust or {}, bigram_adjust or {}
    best = None
    for tags in itertools.product(model.tags, repeat=len(sentence)):
        val = _tag_value(model, tags, sentence, u, v)
        if val != NEG_INF and (best is None or val > best[1]):
            best = (TagSequence(tags), val)
    if best is None:
        raise NoFeasiblePair("no finite-score tag sequence")
    return best


def brute_joint_parse_tag(grammar: Grammar, model: TagModel, sentence: Sequence[str],
                          budget: EnumerationBudget = EnumerationBudget()) -> tuple:
    """(tree, tag sequence, value) maximizing f(y) + g(z) subject to y(i,t) = z(i,t).

    Agreement pins z to the tag sequence of y, so the search runs over parses
    and scores each against the tagger.
    """
    sentence = tuple(sentence)
    best = None
    for tree in enumerate_parses(grammar, sentence, budget):
        g = _tag_value(model, tree.tags, sentence, {}, {})
        if g == NEG_INF:
            continue
        val = _tree_score(grammar, tree.root) + g
        if best is None or val > best[2] or (val == best[2] and tree.sort_key() < best[0].sort_key()):
            best = (tree, TagSequence(tree.tags), val)
    if best is None:
        raise NoFeasiblePair("no parse whose tag sequence the tagger allows")
    return best


# ---------------------------------------------------------------- MRF

def all_assignments(n: int) -> np.ndarray:
    """All of {0,1}^n as rows, in lexicographic order."""
    codes = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)


def brute_pairwise_map(n: int, potentials: Mapping, unary: Mapping | None = None) -> tuple:
    """(assignment, value) maximizing sum of edge tables + sum unary[v] y_v."""
    if n > MAX_MRF_VARS:
        raise PreconditionError(f"brute-force MAP limited to {MAX_MRF_VARS} variables, got {n}")
    Y = all_assignments(n)
    total = np.zeros(len(Y))
    for (i, j), table in sorted(potentials.items()):
        total += np.asarray(table, dtype=float)[Y[:, i - 1], Y[:, j - 1]]
    for v, a in sorted((unary or {}).items()):
        total += a * Y[:, v - 1]
    idx = int(np.argmax(total))  # first maximum = lexicographically first
    return tuple(int(x) for x in Y[idx]), float(total[idx])


def brute_mrf_map(mrf: PairwiseMRF, unary: Mapping | None = None) -> tuple:
    return brute_pairwise_map(mrf.n, mrf.potentials, unary)


# ---------------------------------------------------------------- TSP

def brute_tsp(graph: WeightedGraph) -> tuple:
    """(Tour, value) of the best Hamiltonian cycle."""
    n = graph.n
    if n > MAX_TSP_VERTICES:
        raise PreconditionError(f"brute-force TSP limited to {MAX_TSP_VERTICES} vertices, got {n}")
    best = None
    for perm in itertools.permutations(range(2, n + 1)):
        if perm[0] > perm[-1]:
            continue
        order = (1,) + perm
        loop = order + (1,)
        legs = [tuple(sorted(p)) for p in zip(loop, loop[1:])]
        if any(e not in graph.scores for e in legs):
            continue
        val = math.fsum(graph.scores[e] for e in legs)
        if best is None or val > best[1]:
            best = (Tour(order), val)
    if best is None:
        raise NoFeasiblePair("graph has no Hamiltonian cycle")
    return best


def all_tours(graph: WeightedGraph) -> list:
    """Every Hamiltonian cycle once, as Tour objects in enumeration order."""
    n = graph.n
    if n > MAX_TSP_VERTICES:
        raise PreconditionError(f"tour enumeration limited to {MAX_TSP_VERTICES} vertices, got {n}")
    out = []
    for perm in itertools.permutations(range(2, n + 1)):
        if perm[0] < perm[-1]:
            tour = Tour((1,) + perm)
            if all(e in graph.scores for e in tour.edges):
                out.append(tour)
    return out


def _spans_vertices(vertices, edges) -> bool:
    label = {v: v for v in vertices}
    for i, j in edges:
        a, b = label[i], label[j]
        if a == b:
            return False
        for v in label:
            if label[v] == b:
                label[v] = a
    return len(set(label.values())) == 1


def brute_one_tree(graph: WeightedGraph, u: Mapping | None = None) -> tuple:
    """(OneTree, adjusted value) maximizing sum of theta_e + u_i + u_j over 1-trees."""
    n = graph.n
    if n > MAX_TSP_VERTICES:
        raise PreconditionError(f"1-tree enumeration limited to {MAX_TSP_VERTICES} vertices, got {n}")
    u = u or {}
    adj = {e: w + u.get(e[0], 0.0) + u.get(e[1], 0.0) for e, w in graph.scores.items()}
    rank = {e: (-adj[e], k) for k, e in enumerate(graph.edges)}
    inner = [e for e in graph.edges if 1 not in e]
    at_one = [e for e in graph.edges if 1 in e]
    vertices = range(2, n + 1)
    best = None
    for tree in itertools.combinations(inner, n - 2):
        if not _spans_vertices(vertices, tree):
            continue
        for pair in itertools.combinations(at_one, 2):
            edges = tree + pair
            val = math.fsum(adj[e] for e in edges)
            key = (-val, tuple(sorted(rank[e] for e in edges)))
            if best is None or key < best[0]:
                best = (key, edges, val)
    if best is None:
        raise NoFeasiblePair("graph has no 1-tree")
    return OneTree(best[1]), best[2]


# ---------------------------------------------------------------- phrases

def brute_phrase(lexicon: PhraseLexicon, lm: BigramLM, mode: str = "exactCover",
                 u: Mapping | None = None) -> tuple:
    """(Derivation, value) by exhaustive search over phrase sequences.

    ``mode="exactCover"`` searches derivations translating every source word
    once; ``mode="totalCountN"`` searches all derivations whose counts sum to
    n.  The value is h(y) + sum_i u(i) y(i).
    """
    if mode not in ("exactCover", "totalCountN"):
        raise ValueError(f"unknown mode {mode!r}")
    n = lexicon.n
    if n > MAX_PHRASE_LENGTH or len(lexicon) > MAX_PHRASES:
        raise PreconditionError(
            f"brute-force phrase search limited to n <= {MAX_PHRASE_LENGTH} and <= {MAX_PHRASES} phrases")
    u = u or {}
    phrases = lexicon.phrases
    bonus = [math.fsum(u.get(i, 0.0) for i in range(p.s, p.t + 1)) for p in phrases]
    best = None

    def value(seq):
        words = [w for k in seq for w in phrases[k].words]
        prev, total = lm.start, 0.0
        for w in words:
            total += lm.scores.get((prev, w), lm.floor)
            prev = w
        return total + sum(phrases[k].score + bonus[k] for k in seq)

    def search(seq, used, remaining):
        nonlocal best
        if remaining == 0:
            val = value(seq)
            if best is None or val > best[1]:
                best = (tuple(seq), val)
            return
        for k, p in enumerate(phrases):
            if p.length > remaining:
                continue
            span = set(range(p.s, p.t + 1))
            if mode == "exactCover" and span & used:
                continue
            seq.append(k)
            search(seq, used | span, remaining - p.length)
            seq.pop()

    search([], frozenset(), n)
    if best is None:
        raise NoFeasiblePair(f"no derivation in the {mode} set")
    return Derivation(best[0], lexicon), best[1]


# ---------------------------------------------------------------- finite-set LP

def simplex_max_equivalence(values: Sequence[float], samples: int = 1000, seed: int = 0,
                            tol: float = 1e-12) -> bool:
    """Check that max over a finite set equals max over its convex hull.

    Random distributions must never beat the best element, and the indicator
    of the best element must attain it.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValueError("values must be nonempty")
    if not np.all(np.isfinite(vals)):
        raise ValueError("values must be finite")
    top = float(vals.max())
    rng = np.random.default_rng(seed)
    mixtures = rng.dirichlet(np.ones(vals.size), size=samples) @ vals
    never_exceeds = bool(np.all(mixtures <= top + tol))
    indicator = np.zeros(vals.size)
    indicator[int(np.argmax(vals))] = 1.0
    attained = abs(float(indicator @ vals) - top) <= tol
    return never_exceeds and attained
