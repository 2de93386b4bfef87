import numpy as np
import pytest

from cpaudit.metrics import hit_at_k, ndcg_at_k, ranking_from_scores, weighted_kendall_tau


class TestRankingFromScores:
    def test_ascending_order(self):
        assert ranking_from_scores([0.3, 0.1, 0.2]).tolist() == [2, 0, 1]

    def test_ties_keep_index_order(self):
        assert ranking_from_scores([0.5, 0.5, 0.1]).tolist() == [1, 2, 0]

    def test_inf_goes_last(self):
        assert ranking_from_scores([np.inf, 0.2, 0.5]).tolist() == [2, 0, 1]


class TestWeightedKendall:
    def test_perfect_agreement(self):
        d = [0.1, 0.2, 0.5, 0.9]
        assert weighted_kendall_tau(d, ranking_from_scores(d)) == 1.0

    def test_reversed(self):
        d = np.array([0.1, 0.2, 0.5, 0.9])
        assert weighted_kendall_tau(d, ranking_from_scores(-d)) == -1.0

    def test_hand_case_single_swap(self):
        # items 0 and 1 swapped: (-0.1 + 0.4 + 0.3) / 0.8 = 0.75
        d = [0.1, 0.2, 0.5]
        est = np.array([1, 0, 2])
        assert weighted_kendall_tau(d, est) == pytest.approx(0.75)

    def test_all_equal_distances_defined_zero(self):
        assert weighted_kendall_tau([0.3, 0.3, 0.3], np.array([0, 1, 2])) == 0.0

    def test_bounds_on_fuzzed_inputs(self):
        g = np.random.default_rng(0)
        for _ in range(200):
            m = int(g.integers(2, 9))
            d = g.uniform(size=m)
            est = ranking_from_scores(g.uniform(size=m))
            assert -1.0 <= weighted_kendall_tau(d, est) <= 1.0

    def test_needs_two_items(self):
        with pytest.raises(ValueError):
            weighted_kendall_tau([0.1], np.array([0]))


class TestNdcg:
    def test_perfect_is_one(self):
        d = [0.05, 0.2, 0.6]
        assert ndcg_at_k(d, ranking_from_scores(d), 3) == 1.0

    def test_worst_item_first_at_k1(self):
        d = np.array([0.0, 1.0, 2.0])
        est = np.array([2, 1, 0])  # worst item (d=2, rel=0) ranked first
        assert ndcg_at_k(d, est, 1) == 0.0

    def test_swap_never_increases(self):
        g = np.random.default_rng(1)
        for _ in range(50):
            d = np.sort(g.uniform(size=5))
            perfect = ranking_from_scores(d)
            swapped = perfect.copy()
            i, j = sorted(g.choice(5, size=2, replace=False))
            swapped[[i, j]] = swapped[[j, i]]
            for k in (1, 3, 5):
                assert ndcg_at_k(d, swapped, k) <= ndcg_at_k(d, perfect, k) + 1e-12

    def test_all_equal_defined_one(self):
        assert ndcg_at_k([0.4, 0.4], np.array([1, 0]), 2) == 1.0

    def test_bounds_on_fuzzed_inputs(self):
        g = np.random.default_rng(2)
        for _ in range(200):
            m = int(g.integers(2, 8))
            d = g.uniform(size=m)
            est = ranking_from_scores(g.uniform(size=m))
            for k in (1, 3):
                assert 0.0 <= ndcg_at_k(d, est, k) <= 1.0 + 1e-12


class TestHit:
    def test_identical(self):
        r = np.array([0, 1, 2, 3])
        assert hit_at_k(r, r, 3) == 1.0

    def test_disjoint(self):
        true = np.array([0, 1, 2, 3])
        est = np.array([3, 2, 1, 0])
        assert hit_at_k(true, est, 2) == 0.0

    def test_partial_overlap(self):
        true = np.array([0, 1, 2, 3, 4, 5])
        est = np.array([0, 1, 3, 2, 4, 5])  # top-3 sets {0,1,2} vs {0,1,3}
        assert hit_at_k(true, est, 3) == pytest.approx(2 / 3)

    def test_bounds(self):
        g = np.random.default_rng(3)
        for _ in range(100):
            m = int(g.integers(2, 9))
            a = ranking_from_scores(g.uniform(size=m))
            b = ranking_from_scores(g.uniform(size=m))
            assert 0.0 <= hit_at_k(a, b, 3) <= 1.0
