import numpy as np
import pytest

from lagrelax.core import Status, StepSizeSchedule
from lagrelax.exceptions import AcyclicityError, CoverageError, InstanceFormatError
from lagrelax.generate import mrf_grid_instance
from lagrelax.mrf import (
    PairwiseMRF,
    TreeCover,
    dd_mrf_map,
    forest_score,
    grid_cover,
    grid_edges,
    is_forest,
    max_product_forest,
    split_potentials,
)
from lagrelax.oracles import brute_mrf_map, brute_pairwise_map

from helpers import dyadic


def random_forest(rng, n):
    """Random forest on 1..n: each vertex v > 1 attaches to an earlier vertex or starts a new tree."""
    edges = []
    for v in range(2, n + 1):
        if rng.random() < 0.8:
            edges.append((int(rng.integers(1, v)), v))
    return edges


class TestGridCover:
    def test_single_row(self):
        cover = grid_cover(1, 3)
        assert len(cover.t1) == 2 and len(cover.t2) == 0

    def test_two_by_two(self):
        cover = grid_cover(2, 2)
        assert cover.t1 == {(1, 2), (3, 4)}
        assert cover.t2 == {(1, 3), (2, 4)}

    def test_three_by_three(self):
        cover = grid_cover(3, 3)
        assert len(cover.t1) == 6 and len(cover.t2) == 6
        assert len(cover.t1 | cover.t2) == 12 == len(grid_edges(3, 3))

    def test_forests(self):
        for r in range(1, 5):
            for c in range(1, 5):
                cover = grid_cover(r, c)
                assert is_forest(cover.t1) and is_forest(cover.t2)


class TestSplitPotentials:
    def test_shared_edge_is_halved(self):
        mrf = PairwiseMRF(3, {(1, 2): [[4.0, 0], [0, 4.0]], (2, 3): [[1, 2], [3, 4]]})
        cover = TreeCover([(1, 2), (2, 3)], [(1, 2)])
        split = split_potentials(mrf, cover)
        assert split.first[(1, 2)][0, 0] == 2.0 and split.second[(1, 2)][0, 0] == 2.0

    def test_single_tree_edge_kept_whole(self):
        mrf = PairwiseMRF(3, {(1, 2): [[4.0, 0], [0, 4.0]], (2, 3): [[1, 2], [3, 4]]})
        split = split_potentials(mrf, TreeCover([(1, 2), (2, 3)], [(1, 2)]))
        np.testing.assert_array_equal(split.first[(2, 3)], [[1, 2], [3, 4]])
        assert (2, 3) not in split.second

    def test_random_sums_match(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            mrf, cover = mrf_grid_instance(int(rng.integers(1000)), 3, 3)
            both = TreeCover(cover.t1 | {(1, 4)}, cover.t2 | {(1, 2)})
            split = split_potentials(mrf, both)
            for e, table in mrf.potentials.items():
                total = split.first.get(e, 0.0) + split.second.get(e, 0.0)
                np.testing.assert_array_equal(total, table)

    def test_missing_edge(self):
        mrf = PairwiseMRF(3, {(1, 2): np.zeros((2, 2)), (2, 3): np.zeros((2, 2))})
        with pytest.raises(CoverageError):
            split_potentials(mrf, TreeCover([(1, 2)], []))

    def test_cycle_in_tree(self):
        pots = {(1, 2): np.zeros((2, 2)), (2, 3): np.zeros((2, 2)), (1, 3): np.zeros((2, 2))}
        with pytest.raises(AcyclicityError):
            split_potentials(PairwiseMRF(3, pots), TreeCover([(1, 2), (2, 3), (1, 3)], []))


class TestMaxProduct:
    def test_single_edge(self):
        pots = {(1, 2): np.array([[0.0, 0.0], [0.0, 5.0]])}
        y = max_product_forest(2, [(1, 2)], pots)
        assert y == (1, 1)
        assert forest_score([(1, 2)], pots, y) == 5.0

    def test_unary_penalty(self):
        pots = {(1, 2): np.array([[0.0, 0.0], [0.0, 5.0]])}
        assert max_product_forest(2, [(1, 2)], pots, {1: -10.0}) == (0, 0)

    def test_all_zero_ties_to_zeros(self):
        assert max_product_forest(4, [(1, 2), (3, 4)], {(1, 2): np.zeros((2, 2)), (3, 4): np.zeros((2, 2))}) \
            == (0, 0, 0, 0)

    def test_cycle_rejected(self):
        pots = {(1, 2): np.zeros((2, 2)), (2, 3): np.zeros((2, 2)), (1, 3): np.zeros((2, 2))}
        with pytest.raises(AcyclicityError):
            max_product_forest(3, list(pots), pots)

    def test_random_forests_match_enumeration(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            n = int(rng.integers(2, 8))
            edges = random_forest(rng, n)
            pots = {e: dyadic(rng, size=(2, 2), scale=2) for e in edges}
            unary = {v: float(dyadic(rng, scale=2)) for v in range(1, n + 1) if rng.random() < 0.6}
            expect, _ = brute_pairwise_map(n, pots, unary)
            assert max_product_forest(n, edges, pots, unary) == expect


class TestDdMrfMap:
    def test_tree_mrf_converges_immediately(self):
        pots = {(1, 2): np.array([[1.0, 0.0], [0.0, 0.5]]), (2, 3): np.array([[2.0, 0.0], [0.0, 1.0]])}
        mrf = PairwiseMRF(3, pots)
        trace = dd_mrf_map(mrf, TreeCover(list(pots), []), StepSizeSchedule())
        assert trace.status is Status.E_CONVERGED and trace.converged_iteration == 1
        assert trace.certificate == (0, 0, 0) and trace.certificate_value == 3.0

    def test_grid_weak_duality(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            pots = {e: rng.choice([-1.0, 1.0], size=(2, 2)) for e in grid_edges(3, 3)}
            mrf = PairwiseMRF(9, pots, grid=(3, 3))
            opt = brute_mrf_map(mrf)[1]
            trace = dd_mrf_map(mrf, grid_cover(3, 3), StepSizeSchedule("adaptive", 1.0), max_iters=200)
            assert all(r.dual >= opt - 1e-9 for r in trace.records)

    def test_attractive_cycle(self):
        pots = {(1, 2): [[1, 0], [0, 2]], (2, 3): [[1, 0], [0, 1]], (3, 4): [[2, 0], [0, 1]],
                (1, 4): [[1, 0], [0, 1.5]]}
        mrf = PairwiseMRF(4, pots)
        cover = TreeCover([(1, 2), (2, 3), (3, 4)], [(1, 4)])
        trace = dd_mrf_map(mrf, cover, StepSizeSchedule("adaptive", 1.0))
        assert trace.certified
        y, value = brute_mrf_map(mrf)
        assert trace.certificate == y and trace.certificate_value == value

    def test_dual_is_upper_bound_at_every_iteration(self):
        for seed in range(10):
            mrf, cover = mrf_grid_instance(seed, 2, 4)
            opt = brute_mrf_map(mrf)[1]
            trace = dd_mrf_map(mrf, cover, StepSizeSchedule("constant", 0.25), max_iters=40)
            assert min(trace.duals()) >= opt - 1e-9


class TestMrfFiles:
    def test_round_trip_with_cover(self):
        mrf, cover = mrf_grid_instance(3, 2, 3)
        again, again_cover = PairwiseMRF.from_text(mrf.to_text(cover))
        assert again_cover == cover
        for e in mrf.edges:
            np.testing.assert_array_equal(again.potentials[e], mrf.potentials[e])

    def test_grid_line_implies_cover(self):
        text = "VARS 4\nGRID 2 2\nEDGE 1 2 0 0 0 1\nEDGE 3 4 0 0 0 1\nEDGE 1 3 0 0 0 1\nEDGE 2 4 0 0 0 1\n"
        _, cover = PairwiseMRF.from_text(text)
        assert cover == grid_cover(2, 2)

    def test_reversed_edge_is_transposed(self):
        mrf, _ = PairwiseMRF.from_text("VARS 2\nEDGE 2 1 0 1 2 3\n")
        # table given as [y_2, y_1]; stored as [y_1, y_2]
        np.testing.assert_array_equal(mrf.potentials[(1, 2)], [[0, 2], [1, 3]])

    def test_bad_line(self):
        with pytest.raises(InstanceFormatError) as err:
            PairwiseMRF.from_text("VARS 2\nEDGE 1 2 0 0 0\n", "m.txt")
        assert "m.txt:2" in str(err.value)

    def test_duplicate_and_self_loop(self):
        with pytest.raises(ValueError):
            PairwiseMRF(2, {(1, 1): np.zeros((2, 2))})
        with pytest.raises(ValueError):
            PairwiseMRF(2, {(1, 2): np.zeros((2, 2)), (2, 1): np.zeros((2, 2))})
