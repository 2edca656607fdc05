import numpy as np
import pytest

from lagrelax.core import Status, StepSizeSchedule
from lagrelax.exceptions import InfeasibleError, InstanceFormatError, NoFeasiblePair
from lagrelax.generate import phrase_instance
from lagrelax.oracles import brute_phrase
from lagrelax.phrase import (
    BigramLM,
    Derivation,
    Phrase,
    PhraseBackend,
    PhraseLexicon,
    dd_phrase,
    relaxed_decode,
)

from helpers import random_multipliers


def hello():
    lex = PhraseLexicon(1, [Phrase(1, 1, ("hello",), 2.0)])
    lm = BigramLM({("<s>", "hello"): -0.5})
    return lex, lm


def overlap_instance():
    """A high-scoring pair covering word 2 twice and skipping word 3."""
    phrases = [
        Phrase(1, 1, ("a",), 0.0),
        Phrase(2, 2, ("b",), 0.0),
        Phrase(3, 3, ("c",), 0.0),
        Phrase(1, 2, ("ab",), 3.0),
        Phrase(2, 2, ("bb",), 3.0),
    ]
    lm = BigramLM({("<s>", "a"): 0.0, ("a", "b"): -1.0, ("b", "c"): -1.0, ("<s>", "ab"): 0.0,
                   ("ab", "c"): 0.0, ("ab", "bb"): 0.0}, floor=-2.0)
    return PhraseLexicon(3, phrases), lm


class TestRelaxedDecode:
    def test_single_candidate(self):
        lex, lm = hello()
        d = relaxed_decode(lex, lm)
        assert d.indices == (0,)
        assert d.score(lm) == 1.5

    def test_double_counted_derivation_is_in_relaxed_set(self):
        phrases = [Phrase(i, i, (f"w{i}",), 0.0) for i in range(1, 8)] + [Phrase(1, 3, ("x", "y"), 0.0)]
        lex = PhraseLexicon(7, phrases)
        d = Derivation((7, 7, 5), lex)
        counts = d.counts()
        assert [counts[i] for i in range(1, 8)] == [2, 2, 2, 0, 0, 1, 0]
        assert d.total_count() == 7 and d.in_relaxed_set()
        assert not d.is_exact_cover()

    def test_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for seed in range(30):
            inst = phrase_instance(seed, n=5, extra=3)
            u = random_multipliers(rng, range(1, 6), scale=3)
            expect, value = brute_phrase(inst.lexicon, inst.lm, "totalCountN", u)
            got = relaxed_decode(inst.lexicon, inst.lm, u)
            assert got == expect
            bonus = sum(u.get(i, 0.0) * c for i, c in got.counts().items())
            assert got.score(inst.lm) + bonus == value

    def test_no_accepting_path(self):
        lex = PhraseLexicon(3, [Phrase(1, 2, ("a",), 0.0), Phrase(2, 3, ("b",), 0.0)])
        with pytest.raises(InfeasibleError):
            relaxed_decode(lex, BigramLM({}))

    def test_unknown_bigram_gets_floor(self):
        lm = BigramLM({}, floor=-7.0)
        assert lm("x", "y") == -7.0
        with pytest.raises(ValueError):
            BigramLM({}, floor=-np.inf)


class TestDdPhrase:
    def test_exact_cover_at_once(self):
        lex, lm = hello()
        trace = dd_phrase(lex, lm, StepSizeSchedule())
        assert trace.status is Status.E_CONVERGED and trace.converged_iteration == 1
        assert trace.certificate_value == 1.5

    def test_doubly_covered_position_gets_cheaper(self):
        lex, lm = overlap_instance()
        first = relaxed_decode(lex, lm)
        assert first.indices == (3, 4)
        assert first.counts() == {1: 1, 2: 2, 3: 0}
        trace = dd_phrase(lex, lm, StepSizeSchedule("constant", 0.5), max_iters=4)
        u2 = [r.multipliers.get(2, 0.0) for r in trace.records]
        u3 = [r.multipliers.get(3, 0.0) for r in trace.records]
        assert u2[1] == -0.5 and u2[1] < u2[0]
        assert u3[1] == 0.5

    def test_certificate_is_exact_cover_optimum(self):
        lex, lm = overlap_instance()
        trace = dd_phrase(lex, lm, StepSizeSchedule("adaptive", 1.0))
        assert trace.certified
        _, value = brute_phrase(lex, lm, "exactCover")
        assert trace.certificate_value == value
        assert trace.certificate.is_exact_cover()

    def test_dual_formula(self):
        inst = phrase_instance(4, n=4)
        backend = PhraseBackend(inst.lexicon, inst.lm)
        u = {1: 0.5, 2: -1.0, 4: 2.0}
        res = backend.oracle(u)
        y = res.structure
        assert res.dual == y.score(inst.lm) + sum(u.get(i, 0.0) * (c - 1) for i, c in y.counts().items())
        assert res.subgradient == {i: float(c - 1) for i, c in y.counts().items()}


class TestBrutePhrase:
    def test_one_phrase(self):
        lex, lm = hello()
        d, value = brute_phrase(lex, lm, "exactCover")
        assert d.indices == (0,) and value == 1.5

    def test_exact_cover_infeasible(self):
        lex = PhraseLexicon(3, [Phrase(1, 2, ("a",), 0.0), Phrase(2, 3, ("b",), 0.0)])
        with pytest.raises(NoFeasiblePair):
            brute_phrase(lex, BigramLM({}), "exactCover")

    def test_relaxed_set_contains_exact_covers(self):
        for seed in range(20):
            inst = phrase_instance(seed, n=4, extra=3)
            _, exact = brute_phrase(inst.lexicon, inst.lm, "exactCover")
            _, relaxed = brute_phrase(inst.lexicon, inst.lm, "totalCountN")
            assert relaxed >= exact

    def test_size_limit(self):
        lex = PhraseLexicon(7, [Phrase(i, i, ("w",), 0.0) for i in range(1, 8)])
        with pytest.raises(ValueError):
            brute_phrase(lex, BigramLM({}))


class TestPhraseFiles:
    def test_round_trip(self):
        inst = phrase_instance(1, n=5)
        lex = PhraseLexicon.from_text(inst.lexicon.to_text())
        lm = BigramLM.from_text(inst.lm.to_text())
        assert lex.phrases == inst.lexicon.phrases and lex.n == inst.lexicon.n
        assert lm.scores == inst.lm.scores and lm.floor == inst.lm.floor and lm.start == inst.lm.start

    def test_multiword_target(self):
        lex = PhraseLexicon.from_text("PHRASE 1 2 -0.5 we must\nPHRASE 1 1 0 we\nPHRASE 2 2 0 must\n")
        assert lex.n == 2 and lex.phrases[0].words == ("we", "must")

    def test_uncovered_position(self):
        with pytest.raises(InstanceFormatError):
            PhraseLexicon.from_text("N 3\nPHRASE 1 1 0 a\nPHRASE 3 3 0 c\n")

    def test_bad_lm_line(self):
        with pytest.raises(InstanceFormatError) as err:
            BigramLM.from_text("START <s>\nLM a b\n", "lm.txt")
        assert "lm.txt:2" in str(err.value)
