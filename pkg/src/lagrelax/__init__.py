"""Lagrangian relaxation and dual decomposition for combinatorial decoding.

A generic subgradient engine (:mod:`lagrelax.core`) drives problem backends
for joint parsing and tagging, pairwise MRF MAP inference, the Held-Karp
1-tree bound for the TSP and phrase-based translation decoding.  Exhaustive
reference solvers live in :mod:`lagrelax.oracles`.
"""

from . import core, generate, io, mrf, oracles, parsetag, phrase, tsp
from .core import (
    IterationRecord,
    OracleResult,
    RunTrace,
    Status,
    StepSizeSchedule,
    check_convexity,
    check_subgradient_inequality,
    dual_value,
    duality_gap,
    run_subgradient,
    step_size,
    verify_convergence_bound,
)
from .exceptions import *  # noqa: F401,F403
from .mrf import MrfBackend, PairwiseMRF, TreeCover, dd_mrf_map, grid_cover, max_product_forest
from .parsetag import Grammar, ParseTagBackend, TagModel, cky_decode, dd_parse_tag, viterbi_decode
from .phrase import BigramLM, Derivation, Phrase, PhraseBackend, PhraseLexicon, dd_phrase, relaxed_decode
from .tsp import HeldKarpBackend, OneTree, Tour, WeightedGraph, best_one_tree, hk_relaxation

__version__ = "0.1.0"
