import numpy as np
import pytest

from lagrelax.core import Status, StepSizeSchedule, run_subgradient
from lagrelax.exceptions import (
    CapExceeded,
    InstanceFormatError,
    NoFeasiblePair,
    NoParse,
    NoTagging,
    PreconditionError,
)
from lagrelax.generate import parse_tag_instance
from lagrelax.oracles import brute_parse, brute_tag_sequences, enumerate_parses
from lagrelax.parsetag import (
    Grammar,
    Leaf,
    Node,
    ParseTagBackend,
    ParseTree,
    TagModel,
    TagSequence,
    cky_decode,
    count_derivations,
    dd_parse_tag,
    select_tightening_constraints,
    tightened_parse_oracle,
    toy,
    viterbi_decode,
)

from helpers import random_multipliers


def small_grammar(extra=False):
    binary = {("S", "A", "B"): 0.5}
    lexical = {("A", "x"): 0.1, ("B", "y"): 0.2}
    if extra:
        binary[("S", "A2", "B")] = 0.4
        lexical[("A2", "x")] = 0.1
    return Grammar("S", binary, lexical)


def one_word_tagger():
    return TagModel(1, {("<s>", "a"): 0.0, ("<s>", "b"): 0.0}, {("a", "w"): 1.0, ("b", "w"): 0.5})


class TestGrammar:
    def test_tags_and_nonterminals(self):
        g = small_grammar(extra=True)
        assert set(g.tags) == {"A", "A2", "B"}
        assert "S" in g.nonterminals

    def test_tag_cannot_rewrite_binary(self):
        with pytest.raises(ValueError):
            Grammar("S", {("S", "A", "B"): 0.0, ("A", "B", "B"): 0.0}, {("A", "x"): 0.0, ("B", "y"): 0.0})

    def test_text_round_trip(self):
        g, _, _ = toy.toy_instance()
        again = Grammar.from_text(g.to_text())
        assert again.binary == g.binary and again.lexical == g.lexical and again.start == g.start

    def test_parse_error_reports_line(self):
        text = "START S\n# comment\nRULE S A\n"
        with pytest.raises(InstanceFormatError) as err:
            Grammar.from_text(text, "g.txt")
        assert "g.txt:3" in str(err.value)

    def test_non_numeric_weight(self):
        with pytest.raises(InstanceFormatError) as err:
            Grammar.from_text("START S\nLEX A x heavy\n")
        assert "line 2:" in str(err.value)


class TestParseTree:
    def test_indicators(self):
        tree = cky_decode(small_grammar(), ["x", "y"])
        assert tree.tags == ("A", "B")
        assert tree.tag_indicator(1, "A") == 1 and tree.tag_indicator(1, "B") == 0
        assert tree.bigram_indicator(1, "A", "B") == 1
        assert tree.bigrams() == {(1, "A", "B")}

    def test_bigram_iff_tags(self):
        for seed in range(10):
            inst = parse_tag_instance(seed, n=4)
            for tree in enumerate_parses(inst.grammar, inst.sentence):
                tags = tree.tags
                assert len(tags) == len(inst.sentence)
                for i in range(1, len(tags)):
                    for t1 in inst.grammar.tags:
                        for t2 in inst.grammar.tags:
                            expect = int(tree.tag_indicator(i, t1) and tree.tag_indicator(i + 1, t2))
                            assert tree.bigram_indicator(i, t1, t2) == expect

    def test_score_is_sum_of_rule_weights(self):
        tree = cky_decode(small_grammar(), ["x", "y"])
        assert tree.score(small_grammar()) == pytest.approx(0.8, abs=1e-12)


class TestCky:
    def test_unique_derivation(self):
        g = small_grammar()
        tree = cky_decode(g, ["x", "y"])
        assert tree.root == Node("S", Leaf("A", 1, "x"), Leaf("B", 2, "y"))
        assert tree.score(g) == pytest.approx(0.8, abs=1e-12)

    def test_adjustment_switches_preterminal(self):
        g = small_grammar(extra=True)
        assert cky_decode(g, ["x", "y"]).tags == ("A", "B")
        assert cky_decode(g, ["x", "y"], {(1, "A"): -10.0}).tags == ("A2", "B")

    def test_toy_picks_y3(self):
        g, _, s = toy.toy_instance()
        assert cky_decode(g, s).tags == ("c", "c")

    def test_no_parse(self):
        with pytest.raises(NoParse):
            cky_decode(small_grammar(), ["y", "x"])
        with pytest.raises(NoParse):
            cky_decode(small_grammar(), ["x", "z"])

    def test_matches_enumeration(self):
        rng = np.random.default_rng(1)
        for seed in range(15):
            inst = parse_tag_instance(seed, n=int(rng.integers(2, 6)))
            keys = [(i, t) for i in range(1, len(inst.sentence) + 1) for t in inst.grammar.tags]
            u = random_multipliers(rng, keys, scale=2)
            tree = cky_decode(inst.grammar, inst.sentence, u)
            best, _ = brute_parse(inst.grammar, inst.sentence, u)
            assert tree == best


class TestDerivationCounts:
    def test_toy_has_three(self):
        g, _, s = toy.toy_instance()
        assert count_derivations(g, s) == 3
        assert len(enumerate_parses(g, s)) == 3

    def test_unique(self):
        assert count_derivations(small_grammar(), ["x", "y"]) == 1

    def test_random_counts_agree(self):
        for seed in range(20):
            inst = parse_tag_instance(seed, n=2 + seed % 5)
            trees = enumerate_parses(inst.grammar, inst.sentence)
            assert len(set(trees)) == len(trees)
            assert count_derivations(inst.grammar, inst.sentence) == len(trees)


class TestViterbi:
    def test_single_comparison(self):
        assert viterbi_decode(one_word_tagger(), ["w"]).tags == ("a",)

    def test_adjust_is_subtracted(self):
        assert viterbi_decode(one_word_tagger(), ["w"], {(1, "a"): 1.0}).tags == ("b",)

    def test_toy_tie_goes_to_z1(self):
        _, m, s = toy.toy_instance()
        assert viterbi_decode(m, s).tags == ("a", "a")

    def test_no_tagging(self):
        m = TagModel(1, {("<s>", "a"): 0.0}, {("a", "w"): 0.0})
        with pytest.raises(NoTagging):
            viterbi_decode(m, ["v"])

    def test_text_round_trip(self):
        _, m, _ = toy.toy_instance()
        again = TagModel.from_text(m.to_text())
        assert again.transitions == m.transitions and again.emissions == m.emissions

    @pytest.mark.parametrize("order", [1, 2])
    def test_matches_enumeration(self, order):
        rng = np.random.default_rng(order)
        tags = ["a", "b", "c"]
        words = ["p", "q"]
        for _ in range(15):
            if order == 1:
                hist = [("<s>",)] + [(t,) for t in tags]
            else:
                hist = [("<s>", "<s>")] + [("<s>", t) for t in tags] + [(x, y) for x in tags for y in tags]
            trans = {h + (t,): float(rng.integers(-4, 5) / 2) for h in hist for t in tags if rng.random() < 0.85}
            emit = {(t, w): float(rng.integers(-4, 5) / 2) for t in tags for w in words if rng.random() < 0.8}
            model = TagModel(order, trans, emit)
            n = int(rng.integers(1, 6))
            sentence = list(rng.choice(words, size=n))
            u = random_multipliers(rng, [(i, t) for i in range(1, n + 1) for t in tags], scale=2)
            v = random_multipliers(rng, [(i, a, b) for i in range(1, n) for a in tags for b in tags], scale=2)
            try:
                expect = brute_tag_sequences(model, sentence, u, v)[0]
            except NoFeasiblePair:
                with pytest.raises(NoTagging):
                    viterbi_decode(model, sentence, u, v)
                continue
            assert viterbi_decode(model, sentence, u, v) == expect


class TestTightenedOracle:
    def test_zero_bigram_matches_cky(self):
        g, _, s = toy.toy_instance()
        for u in ({}, {(1, "c"): -3.0}, {(1, "a"): 0.5, (2, "c"): -1.5}):
            assert tightened_parse_oracle(g, s, u, {}) == cky_decode(g, s, u)

    def test_bigram_penalty(self):
        g, _, s = toy.toy_instance()
        tree = tightened_parse_oracle(g, s, {(1, "c"): -1.5}, {(1, "a", "b"): -3.0})
        # y1 drops to 1 - 3 = -2, y3 to 2 - 1.5 = 0.5, y2 stays at 1
        assert tree.tags == ("b", "a")

    def test_matches_enumeration(self):
        rng = np.random.default_rng(7)
        for seed in range(15):
            inst = parse_tag_instance(100 + seed, n=4)
            tags = inst.grammar.tags
            u = random_multipliers(rng, [(i, t) for i in range(1, 5) for t in tags], scale=2)
            v = random_multipliers(rng, [(i, a, b) for i in range(1, 4) for a in tags for b in tags], scale=2)
            got = tightened_parse_oracle(inst.grammar, inst.sentence, u, v)
            best, best_val = None, None
            for tree in enumerate_parses(inst.grammar, inst.sentence):
                val = tree.score(inst.grammar) + sum(u.get((i, t), 0.0) for i, t in enumerate(tree.tags, 1)) \
                    + sum(v.get(b, 0.0) for b in tree.bigrams())
                if best is None or val > best_val or (val == best_val and tree.sort_key() < best.sort_key()):
                    best, best_val = tree, val
            assert got == best

    def test_cap(self):
        inst = parse_tag_instance(3, n=6)
        count = count_derivations(inst.grammar, inst.sentence)
        if count > 1:
            with pytest.raises(CapExceeded):
                tightened_parse_oracle(inst.grammar, inst.sentence, {}, {}, enumeration_cap=count - 1)


class TestDualDecomposition:
    def test_agreeing_instance_converges_immediately(self):
        g = small_grammar()
        m = TagModel(1, {("<s>", "A"): 0.0, ("A", "B"): 0.0}, {("A", "x"): 0.0, ("B", "y"): 0.0})
        trace = dd_parse_tag(g, m, ["x", "y"], StepSizeSchedule())
        assert trace.status is Status.E_CONVERGED and trace.converged_iteration == 1
        assert trace.certificate_value == pytest.approx(0.8, abs=1e-12)

    def test_toy_oscillates(self):
        g, m, s = toy.toy_instance()
        trace = dd_parse_tag(g, m, s, StepSizeSchedule("adaptive", toy.DEFAULT_C))
        assert not trace.certified
        pairs = {toy.pair_names(r.structure) for r in trace.records[-20:]}
        assert pairs <= {("y1", "z1"), ("y2", "z2")}
        assert abs(trace.best_dual - 2.0) < 0.05

    def test_toy_with_constraint(self):
        g, m, s = toy.toy_instance()
        trace = dd_parse_tag(g, m, s, StepSizeSchedule("adaptive", toy.DEFAULT_C),
                             bigram_constraints=[toy.TIGHTENING_CONSTRAINT])
        assert trace.certified
        assert toy.pair_names(trace.certificate) == ("y3", "z3")
        assert trace.certificate_value == 0.0

    def test_toy_auto_tighten(self):
        g, m, s = toy.toy_instance()
        trace = dd_parse_tag(g, m, s, StepSizeSchedule("adaptive", toy.DEFAULT_C), tighten=True)
        assert trace.certified and trace.certificate_value == 0.0
        added = [tuple(b) for phase in trace.meta["tightening_rounds"] for b in phase["added"]]
        assert toy.TIGHTENING_CONSTRAINT in added

    def test_primalize_forces_agreement(self):
        g, m, s = toy.toy_instance()
        backend = ParseTagBackend(g, m, s)
        y1 = ParseTree(Node("S", Leaf("a", 1, "w1"), Leaf("b", 2, "w2")))
        assert backend.primalize((y1, TagSequence(("a", "a")))) is None  # g(a, b) is forbidden
        y3 = ParseTree(Node("S", Leaf("c", 1, "w1"), Leaf("c", 2, "w2")))
        pair, value = backend.primalize((y3, TagSequence(("a", "a"))))
        assert pair.tagging.tags == ("c", "c") and value == 0.0

    def test_bad_constraint_position(self):
        g, m, s = toy.toy_instance()
        with pytest.raises(PreconditionError):
            ParseTagBackend(g, m, s, [(2, "a", "b")])


class TestSelection:
    def test_toy_window_contains_constraint(self):
        g, m, s = toy.toy_instance()
        trace = dd_parse_tag(g, m, s, StepSizeSchedule("adaptive", toy.DEFAULT_C))
        chosen = select_tightening_constraints(trace, window=20, top_k=2)
        assert toy.TIGHTENING_CONSTRAINT in chosen

    def test_full_agreement_gives_empty(self):
        g = small_grammar()
        m = TagModel(1, {("<s>", "A"): 0.0, ("A", "B"): 0.0}, {("A", "x"): 0.0, ("B", "y"): 0.0})
        trace = run_subgradient(ParseTagBackend(g, m, ["x", "y"]), StepSizeSchedule())
        assert select_tightening_constraints(trace, window=1) == []

    def test_synthetic_counts(self):
        class Rec:
            def __init__(self, structure):
                self.structure = structure

        class FakeTrace:
            records = []

        ya = ParseTree(Node("S", Node("S", Leaf("a", 1, "w"), Leaf("a", 2, "w")), Leaf("a", 3, "w")))
        yb = ParseTree(Node("S", Node("S", Leaf("a", 1, "w"), Leaf("b", 2, "w")), Leaf("a", 3, "w")))
        always = TagSequence(("a", "a", "b"))  # disagrees on (2, a, a) vs (2, a, b) every time
        FakeTrace.records = [Rec((ya, always)), Rec((ya, always)), Rec((yb, TagSequence(("a", "b", "a"))))]
        chosen = select_tightening_constraints(FakeTrace, window=3, top_k=1)
        assert chosen == [(2, "a", "a")]

    def test_short_trace_rejected(self):
        g, m, s = toy.toy_instance()
        trace = dd_parse_tag(g, m, s, StepSizeSchedule("adaptive", toy.DEFAULT_C), max_iters=3)
        with pytest.raises(PreconditionError):
            select_tightening_constraints(trace, window=20)
