"""MAP inference in pairwise binary MRFs by decomposing the edges into two forests.

Vertices are numbered 1..n and assignments are tuples ``y`` with ``y[v-1]``
the state of vertex ``v``.  Edges are stored as ``(i, j)`` with ``i < j``.
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
from .exceptions import AcyclicityError, CoverageError, InstanceFormatError

NEG_INF = -math.inf


def _edge(i: int, j: int) -> tuple:
    if i == j:
        raise ValueError(f"self-loop on vertex {i}")
    return (i, j) if i < j else (j, i)


class PairwiseMRF:
    """h(y) = sum over edges {i, j} of theta_ij[y_i, y_j]."""

    def __init__(self, n: int, potentials: Mapping, grid: tuple | None = None):
        self.n = int(n)
        pots = {}
        for (i, j), table in potentials.items():
            key = _edge(int(i), int(j))
            if key in pots:
                raise ValueError(f"duplicate edge {key}")
            if not (1 <= key[0] and key[1] <= self.n):
                raise ValueError(f"edge {key} outside vertices 1..{self.n}")
            arr = np.array(table, dtype=float).reshape(2, 2)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite potential on edge {key}")
            pots[key] = arr if i < j else arr.T
        self.potentials = dict(sorted(pots.items()))
        self.grid = grid

    @property
    def edges(self) -> list:
        return list(self.potentials)

    def score(self, y) -> float:
        total = 0.0
        for (i, j), table in self.potentials.items():
            total += table[y[i - 1], y[j - 1]]
        return float(total)

    @classmethod
    def from_text(cls, text: str, path=None):
        """Parse an MRF file; returns ``(mrf, cover)`` where cover may be None."""
        n = None
        grid = None
        pots = {}
        t1, t2 = [], []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "VARS" and len(parts) == 2:
                    n = int(parts[1])
                elif parts[0] == "GRID" and len(parts) == 3:
                    grid = (int(parts[1]), int(parts[2]))
                elif parts[0] == "EDGE" and len(parts) == 7:
                    i, j = int(parts[1]), int(parts[2])
                    vals = [float(x) for x in parts[3:]]
                    key = _edge(i, j)
                    table = np.array(vals).reshape(2, 2)
                    pots[key] = table if (i, j) == key else table.T
                elif parts[0] in ("TREE1", "TREE2") and len(parts) == 3:
                    (t1 if parts[0] == "TREE1" else t2).append(_edge(int(parts[1]), int(parts[2])))
                else:
                    raise InstanceFormatError(f"unrecognized MRF line: {raw.strip()!r}", path, lineno)
            except ValueError as exc:
                if isinstance(exc, InstanceFormatError):
                    raise
                raise InstanceFormatError(str(exc), path, lineno) from None
        if n is None and grid is not None:
            n = grid[0] * grid[1]
        if n is None:
            raise InstanceFormatError("missing VARS line", path)
        try:
            mrf = cls(n, pots, grid)
        except ValueError as exc:
            raise InstanceFormatError(str(exc), path) from None
        if t1 or t2:
            cover = TreeCover(t1, t2)
        elif grid is not None:
            cover = grid_cover(*grid)
        else:
            cover = None
        return mrf, cover

    def to_text(self, cover: "TreeCover | None" = None) -> str:
        lines = [f"VARS {self.n}"]
        if self.grid is not None:
            lines.append(f"GRID {self.grid[0]} {self.grid[1]}")
        for (i, j), t in self.potentials.items():
            lines.append(f"EDGE {i} {j} " + " ".join(repr(float(x)) for x in t.ravel()))
        if cover is not None:
            lines += [f"TREE1 {i} {j}" for i, j in sorted(cover.t1)]
            lines += [f"TREE2 {i} {j}" for i, j in sorted(cover.t2)]
        return "\n".join(lines) + "\n"


def _find(parent: dict, x):
    while parent.setdefault(x, x) != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def is_forest(edges: Iterable) -> bool:
    parent: dict = {}
    for i, j in edges:
        ri, rj = _find(parent, i), _find(parent, j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


@dataclass(frozen=True)
class TreeCover:
    t1: frozenset
    t2: frozenset

    def __init__(self, t1: Iterable, t2: Iterable):
        object.__setattr__(self, "t1", frozenset(_edge(*e) for e in t1))
        object.__setattr__(self, "t2", frozenset(_edge(*e) for e in t2))

    def multiplicity(self, edge) -> int:
        return (edge in self.t1) + (edge in self.t2)

    def validate(self, mrf: PairwiseMRF) -> None:
        edges = set(mrf.edges)
        extra = (self.t1 | self.t2) - edges
        if extra:
            raise CoverageError(f"cover uses edges not in the MRF: {sorted(extra)}")
        missing = edges - (self.t1 | self.t2)
        if missing:
            raise CoverageError(f"cover misses edges {sorted(missing)}")
        for name, part in (("T1", self.t1), ("T2", self.t2)):
            if not is_forest(sorted(part)):
                raise AcyclicityError(f"{name} contains a cycle")


@dataclass
class SplitPotentials:
    first: dict
    second: dict


def split_potentials(mrf: PairwiseMRF, cover: TreeCover) -> SplitPotentials:
    """Divide each edge table by the number of forests containing the edge."""
    cover.validate(mrf)
    first, second = {}, {}
    for edge, table in mrf.potentials.items():
        share = table / cover.multiplicity(edge)
        if edge in cover.t1:
            first[edge] = share.copy()
        if edge in cover.t2:
            second[edge] = share.copy()
    return SplitPotentials(first, second)


def grid_cover(rows: int, cols: int) -> TreeCover:
    """Horizontal edges in T1, vertical edges in T2 (row-major numbering from 1)."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    vid = lambda r, c: r * cols + c + 1
    horizontal = [(vid(r, c), vid(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    vertical = [(vid(r, c), vid(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return TreeCover(horizontal, vertical)


def grid_edges(rows: int, cols: int) -> list:
    cover = grid_cover(rows, cols)
    return sorted(cover.t1 | cover.t2)


class _Forest:
    """Rooted forest with a fixed leaf-to-root message schedule."""

    def __init__(self, n: int, edges: Iterable, potentials: Mapping):
        edges = sorted(_edge(*e) for e in edges)
        if not is_forest(edges):
            raise AcyclicityError("edge set contains a cycle")
        self.n = n
        adj = {v: [] for v in range(1, n + 1)}
        for i, j in edges:
            adj[i].append(j)
            adj[j].append(i)
        self.parent = {}
        self.pair = {}  # child -> table indexed [parent state, child state]
        self.component = {}
        self.order = []  # per component: vertices in pre-order, root first
        seen = set()
        for root in range(1, n + 1):
            if root in seen:
                continue
            comp = []
            stack = [root]
            seen.add(root)
            self.parent[root] = None
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in sorted(adj[v], reverse=True):
                    if w not in seen:
                        seen.add(w)
                        self.parent[w] = v
                        table = np.asarray(potentials[_edge(v, w)], dtype=float)
                        self.pair[w] = table if v < w else table.T
                        stack.append(w)
            for v in comp:
                self.component[v] = len(self.order)
            self.order.append(comp)

    def component_max(self, comp: list, unary: Mapping, clamps: Mapping) -> float:
        belief = {}
        for v in comp:
            a = unary.get(v, 0.0)
            b = [0.0, a]
            if v in clamps:
                b[1 - clamps[v]] = NEG_INF
            belief[v] = b
        for v in reversed(comp):
            p = self.parent[v]
            if p is None:
                continue
            table = self.pair[v]
            bv = belief[v]
            for sp in (0, 1):
                msg = max(table[sp, 0] + bv[0], table[sp, 1] + bv[1])
                belief[p][sp] += msg
        root = comp[0]
        return max(belief[root])


def max_product_forest(n: int, edges: Iterable, potentials: Mapping, unary_adjust: Mapping | None = None) -> tuple:
    """argmax over {0,1}^n of sum of edge potentials + sum_v unary_adjust[v] * y_v.

    ``potentials`` maps each edge ``(i, j)``, i < j, to a 2x2 table indexed
    ``[y_i, y_j]``.  Among optimal assignments the lexicographically smallest
    one is returned: vertices are fixed in increasing order, each to 0 when a
    max-product pass with that clamp still attains the optimum.
    """
    forest = _Forest(n, edges, potentials)
    unary = dict(unary_adjust or {})
    clamps: dict = {}
    best = [forest.component_max(comp, unary, clamps) for comp in forest.order]
    for v in range(1, n + 1):
        c = forest.component[v]
        clamps[v] = 0
        if forest.component_max(forest.order[c], unary, clamps) != best[c]:
            clamps[v] = 1
    return tuple(clamps[v] for v in range(1, n + 1))


def forest_score(edges: Iterable, potentials: Mapping, y) -> float:
    total = 0.0
    for i, j in sorted(edges):
        total += potentials[(i, j)][y[i - 1], y[j - 1]]
    return float(total)


class MrfBackend:
    """Dual decomposition over two forests; constraint ids are vertex numbers."""

    def __init__(self, mrf: PairwiseMRF, cover: TreeCover):
        self.mrf = mrf
        self.cover = cover
        self.split = split_potentials(mrf, cover)

    def describe(self) -> dict:
        return {"problem": "mrf", "n": self.mrf.n, "edges": len(self.mrf.edges),
                "t1": len(self.cover.t1), "t2": len(self.cover.t2)}

    def decode(self, u):
        n = self.mrf.n
        plus = {v: float(u.get(v, 0.0)) for v in range(1, n + 1)}
        minus = {v: -x for v, x in plus.items()}
        y = max_product_forest(n, self.cover.t1, self.split.first, plus)
        z = max_product_forest(n, self.cover.t2, self.split.second, minus)
        return y, z

    def lagrangian(self, u, pair) -> float:
        y, z = pair
        f = forest_score(self.cover.t1, self.split.first, y)
        g = forest_score(self.cover.t2, self.split.second, z)
        coupling = math.fsum(u.get(v, 0.0) * (y[v - 1] - z[v - 1]) for v in range(1, self.mrf.n + 1))
        return f + g + coupling

    def oracle(self, u) -> OracleResult:
        pair = self.decode(u)
        y, z = pair
        gamma = {v: float(y[v - 1] - z[v - 1]) for v in range(1, self.mrf.n + 1)}
        return OracleResult(pair, self.lagrangian(u, pair), gamma)

    def primalize(self, pair):
        y = pair[0]
        return y, self.mrf.score(y)


def dd_mrf_map(mrf: PairwiseMRF, cover: TreeCover, schedule: StepSizeSchedule, max_iters: int = 500,
               stall_window: int = DEFAULT_STALL_WINDOW, stall_eps: float = DEFAULT_STALL_EPS) -> RunTrace:
    return run_subgradient(MrfBackend(mrf, cover), schedule, max_iters, stall_window, stall_eps)
