from .dd import (
    DEFAULT_ENUMERATION_CAP,
    ParseTagBackend,
    ParseTagPair,
    dd_parse_tag,
    select_tightening_constraints,
    tightened_parse_oracle,
)
from .grammar import Grammar, Leaf, Node, ParseTree, cky_decode, count_derivations, iter_derivations
from .tagger import TagModel, TagSequence, viterbi_decode
from . import toy

__all__ = [
    "DEFAULT_ENUMERATION_CAP", "Grammar", "Leaf", "Node", "ParseTagBackend", "ParseTagPair",
    "ParseTree", "TagModel", "TagSequence", "cky_decode", "count_derivations", "dd_parse_tag",
    "iter_derivations", "select_tightening_constraints", "tightened_parse_oracle", "toy",
    "viterbi_decode",
]
