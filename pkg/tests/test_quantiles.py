import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpaudit.quantiles import conformal_quantile, weighted_quantile


def oracle_conformal(scores, alpha):
    """Independent order-statistic selection."""
    s = sorted(scores)
    k = math.ceil((len(s) + 1) * (1 - alpha))
    return math.inf if k > len(s) else s[k - 1]


def oracle_weighted(values, weights, tau):
    """Materialize-and-sort: walk distinct values, compare cumulative mass."""
    pairs = sorted(zip(values, weights))
    total = sum(weights)
    cum = 0.0
    for i, (v, w) in enumerate(pairs):
        cum += w
        if i + 1 < len(pairs) and pairs[i + 1][0] == v:
            continue
        if cum >= tau * total:
            return v
    return pairs[-1][0]


class TestConformalQuantile:
    def test_hand_case_nine_scores(self):
        assert conformal_quantile(range(1, 10), 0.1) == 9  # k = ceil(10*0.9) = 9

    def test_hand_case_three_scores(self):
        assert conformal_quantile([1, 2, 3], 0.5) == 2  # k = 2

    def test_overflow_gives_inf(self):
        assert conformal_quantile([5.0], 0.1) == math.inf

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            conformal_quantile([], 0.1)

    def test_fuzz_against_oracle(self):
        g = np.random.default_rng(11)
        for _ in range(1000):
            n = int(g.integers(1, 60))
            scores = g.normal(size=n) * 10.0 ** g.integers(-3, 3)
            alpha = float(g.uniform(0.01, 0.99))
            assert conformal_quantile(scores, alpha) == oracle_conformal(scores, alpha)


class TestWeightedQuantile:
    def test_degenerate_mass(self):
        for tau in (0.1, 0.5, 0.9):
            assert weighted_quantile([5, 7, 9], [1, 0, 0], tau) == 5

    def test_hand_cumulative(self):
        # cumulative masses 0.25, 0.5, 1.0 -> tau=0.5 picks the middle value
        assert weighted_quantile([1, 2, 3], [1, 1, 2], 0.5) == 2

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            weighted_quantile([1, 2], [0, 0], 0.5)

    def test_fuzz_against_oracle(self):
        g = np.random.default_rng(23)
        for _ in range(1000):
            n = int(g.integers(1, 50))
            values = np.round(g.normal(size=n), int(g.integers(0, 4)))
            weights = g.uniform(0, 1, size=n)
            weights[g.uniform(size=n) < 0.2] = 0.0
            if weights.sum() == 0:
                weights[0] = 1.0
            tau = float(g.uniform(0.01, 0.99))
            assert weighted_quantile(values, weights, tau) == oracle_weighted(
                values.tolist(), weights.tolist(), tau)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
           st.floats(0.01, 0.99))
    def test_uniform_weights_reduce_to_order_statistic(self, values, tau):
        values = np.asarray(values)
        got = weighted_quantile(values, np.ones(values.size), tau)
        k = math.ceil(tau * values.size)
        assert got == np.sort(values)[k - 1]
