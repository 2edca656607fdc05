"""Held-Karp Lagrangian relaxation of the (maximization) travelling salesman problem.

A 1-tree is a spanning tree over vertices 2..n plus two edges at vertex 1.
Relaxing the degree-2 constraints of a tour with per-vertex multipliers
turns the problem into a max-weight 1-tree search under the adjusted edge
scores theta_e + u_i + u_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import (
    DEFAULT_STALL_EPS,
    DEFAULT_STALL_WINDOW,
    OracleResult,
    RunTrace,
    StepSizeSchedule,
    run_subgradient,
)
from .exceptions import InfeasibleError, InstanceFormatError


class WeightedGraph:
    def __init__(self, n: int, scores: Mapping):
        if n < 3:
            raise ValueError(f"need at least 3 vertices, got {n}")
        self.n = int(n)
        clean = {}
        for (i, j), w in scores.items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (1 <= min(i, j) and max(i, j) <= n):
                raise ValueError(f"edge ({i}, {j}) outside vertices 1..{n}")
            if not math.isfinite(w):
                raise ValueError(f"non-finite score on edge ({i}, {j})")
            key = (min(i, j), max(i, j))
            if key in clean:
                raise ValueError(f"duplicate edge {key}")
            clean[key] = float(w)
        self.scores = dict(sorted(clean.items()))
        self.edges = list(self.scores)
        self.edge_index = {e: k for k, e in enumerate(self.edges)}

    def adjusted(self, u: Mapping) -> dict:
        return {(i, j): w + u.get(i, 0.0) + u.get(j, 0.0) for (i, j), w in self.scores.items()}

    def score(self, edges: Iterable) -> float:
        return math.fsum(self.scores[e] for e in edges)

    @classmethod
    def complete(cls, n: int, seed: int, low: int = 0, high: int = 20) -> "WeightedGraph":
        """Complete graph with integer scores drawn uniformly from [low, high]."""
        rng = np.random.default_rng(seed)
        scores = {}
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                scores[(i, j)] = float(rng.integers(low, high + 1))
        return cls(n, scores)

    @classmethod
    def from_text(cls, text: str, path=None) -> "WeightedGraph":
        n = None
        scores = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "N" and len(parts) == 2:
                    n = int(parts[1])
                elif parts[0] == "EDGE" and len(parts) == 4:
                    key = (int(parts[1]), int(parts[2]))
                    if key in scores or key[::-1] in scores:
                        raise InstanceFormatError(f"duplicate edge {key}", path, lineno)
                    scores[key] = float(parts[3])
                else:
                    raise InstanceFormatError(f"unrecognized graph line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        if n is None:
            raise InstanceFormatError("missing N line", path)
        try:
            return cls(n, scores)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None

    def to_text(self) -> str:
        lines = [f"N {self.n}"] + [f"EDGE {i} {j} {w!r}" for (i, j), w in self.scores.items()]
        return "\n".join(lines) + "\n"


def degrees(edges: Iterable, n: int) -> dict:
    deg = {v: 0 for v in range(1, n + 1)}
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    return deg


def degree_residuals(edges: Iterable, n: int) -> dict:
    """deg(v) - 2 for every vertex."""
    return {v: d - 2 for v, d in degrees(edges, n).items()}


def _connected(vertices: Iterable, edges: Iterable) -> bool:
    vertices = list(vertices)
    adj = {v: [] for v in vertices}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {vertices[0]}
    stack = [vertices[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vertices)


def is_one_tree(edges: Iterable, n: int) -> bool:
    edges = [tuple(sorted(e)) for e in edges]
    at_one = [e for e in edges if 1 in e]
    rest = [e for e in edges if 1 not in e]
    if len(at_one) != 2 or len(set(at_one)) != 2 or len(rest) != n - 2:
        return False
    return _connected(range(2, n + 1), rest)


def is_tour(edges: Iterable, n: int) -> bool:
    edges = [tuple(sorted(e)) for e in edges]
    if len(edges) != n or len(set(edges)) != n:
        return False
    if any(d != 2 for d in degrees(edges, n).values()):
        return False
    return _connected(range(1, n + 1), edges)


@dataclass(frozen=True)
class OneTree:
    edges: tuple  # sorted (i, j) pairs

    def __init__(self, edges: Iterable):
        object.__setattr__(self, "edges", tuple(sorted(tuple(sorted(e)) for e in edges)))

    def residuals(self, n: int) -> dict:
        return degree_residuals(self.edges, n)


@dataclass(frozen=True)
class Tour:
    order: tuple  # vertex sequence starting at 1

    @property
    def edges(self) -> tuple:
        loop = self.order + self.order[:1]
        return tuple(sorted(tuple(sorted(p)) for p in zip(loop, loop[1:])))


def best_one_tree(graph: WeightedGraph, u: Mapping | None = None) -> OneTree:
    """Max-weight 1-tree under theta_e + u_i + u_j.

    Kruskal over vertices 2..n with edges ranked by (-adjusted score, edge
    index), then the two best edges at vertex 1 under the same ranking.
    """
    adj = graph.adjusted(u or {})
    rank = lambda e: (-adj[e], graph.edge_index[e])
    inner = sorted((e for e in graph.edges if 1 not in e), key=rank)
    parent = {v: v for v in range(2, graph.n + 1)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for i, j in inner:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.append((i, j))
            if len(tree) == graph.n - 2:
                break
    if len(tree) != graph.n - 2:
        raise InfeasibleError("vertices 2..n do not induce a connected subgraph")
    at_one = sorted((e for e in graph.edges if 1 in e), key=rank)
    if len(at_one) < 2:
        raise InfeasibleError("vertex 1 has fewer than two incident edges")
    return OneTree(tree + at_one[:2])


class HeldKarpBackend:
    """Constraint ids are vertex numbers; residual is deg(v) - 2."""

    def __init__(self, graph: WeightedGraph):
        self.graph = graph

    def describe(self) -> dict:
        return {"problem": "tsp", "n": self.graph.n, "edges": len(self.graph.edges)}

    def lagrangian(self, u, tree: OneTree) -> float:
        res = tree.residuals(self.graph.n)
        return self.graph.score(tree.edges) + math.fsum(u.get(v, 0.0) * r for v, r in sorted(res.items()))

    def oracle(self, u) -> OracleResult:
        tree = best_one_tree(self.graph, u)
        gamma = {v: float(r) for v, r in tree.residuals(self.graph.n).items()}
        return OracleResult(tree, self.lagrangian(u, tree), gamma)

    def primalize(self, tree: OneTree):
        if not is_tour(tree.edges, self.graph.n):
            return None
        return tree, self.graph.score(tree.edges)


def hk_relaxation(graph: WeightedGraph, schedule: StepSizeSchedule, max_iters: int = 500,
                  stall_window: int = DEFAULT_STALL_WINDOW, stall_eps: float = DEFAULT_STALL_EPS) -> RunTrace:
    return run_subgradient(HeldKarpBackend(graph), schedule, max_iters, stall_window, stall_eps)
