import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpaudit.conformal import TrivialInterval
from cpaudit.data import Dataset
from cpaudit.metrics import cvi_report, cvp_curve, marginal_stats, reliability_diagram


class _FixedWidth:
    def __init__(self, center, half):
        self.center, self.half = center, half

    def predict(self, X):
        m = np.full(np.asarray(X).shape[0], self.center)
        return m - self.half, m + self.half


class TestCviReport:
    def test_on_target_all_zero(self):
        rep = cvi_report(np.full(50, 0.9), alpha=0.1, gamma=0.02)
        assert rep.cvi == rep.cvi_u == rep.cvi_o == 0.0
        assert rep.pi_minus == rep.pi_plus == rep.cmu == rep.cmo == 0.0

    def test_two_point_hand_case(self):
        rep = cvi_report([0.8, 1.0], alpha=0.1, gamma=0.0)
        assert rep.cvi == pytest.approx(0.1, abs=1e-15)
        assert rep.cvi_u == pytest.approx(0.05, abs=1e-15)
        assert rep.cvi_o == pytest.approx(0.05, abs=1e-15)
        assert rep.pi_minus == rep.pi_plus == 0.5
        assert rep.cmu == pytest.approx(0.1, abs=1e-15)
        assert rep.cmo == pytest.approx(0.1, abs=1e-15)

    def test_three_point_gamma_hand_case(self):
        rep = cvi_report([0.8, 0.9, 0.99], alpha=0.1, gamma=0.05)
        assert rep.pi_minus == pytest.approx(1 / 3)   # threshold 0.855
        assert rep.pi_plus == pytest.approx(1 / 3)    # threshold 0.945
        assert rep.cmu == pytest.approx(0.1, abs=1e-12)
        assert rep.cmo == pytest.approx(0.09, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cvi_report([], 0.1)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50),
           st.floats(0.01, 0.5), st.floats(0, 0.2))
    def test_additivity_exact(self, etas, alpha, gamma):
        rep = cvi_report(etas, alpha, gamma)
        assert abs(rep.cvi - (rep.cvi_u + rep.cvi_o)) <= 1e-12
        assert rep.pi_minus + rep.pi_plus <= 1.0


class TestCvpCurve:
    def test_constant_curve_is_flat(self):
        curve = cvp_curve(np.full(10, 0.7), alpha=0.1)
        assert np.all(curve.quantiles == 0.7)

    def test_areas_equal_index_decomposition(self):
        g = np.random.default_rng(0)
        for _ in range(50):
            etas = g.uniform(size=int(g.integers(1, 60)))
            rep = cvi_report(etas, 0.1, gamma=0.0)
            curve = cvp_curve(etas, 0.1)
            assert abs(curve.area_below_target - rep.cvi_u) <= 1e-12
            assert abs(curve.area_above_target - rep.cvi_o) <= 1e-12

    def test_crossing_matches_under_rate_within_grid_step(self):
        g = np.random.default_rng(1)
        etas = g.uniform(size=40)
        rep = cvi_report(etas, 0.1, gamma=0.0)
        curve = cvp_curve(etas, 0.1)
        assert abs(curve.crossing_proportion() - rep.pi_minus) <= 1 / 40 + 1e-12

    def test_grid_is_one_over_n(self):
        curve = cvp_curve([0.5, 0.6, 0.7, 0.8], 0.1)
        assert np.allclose(curve.props, [0.25, 0.5, 0.75, 1.0])


class TestMarginalStats:
    def test_everything_covered(self):
        d = Dataset(np.zeros((20, 1)), np.zeros(20))
        cov, _ = marginal_stats(TrivialInterval(0.1), d)
        assert cov == 1.0

    def test_constant_width(self):
        d = Dataset(np.zeros((15, 1)), np.zeros(15))
        _, length = marginal_stats(_FixedWidth(0.0, 1.5), d)
        assert length == pytest.approx(3.0)

    def test_infinite_width_flagged_as_inf(self):
        d = Dataset(np.zeros((5, 1)), np.zeros(5))
        _, length = marginal_stats(TrivialInterval(0.1), d)
        assert np.isinf(length)

    def test_matches_rowwise_export_aggregation(self):
        g = np.random.default_rng(2)
        d = Dataset(g.normal(size=(30, 2)), g.normal(size=30))
        pred = _FixedWidth(0.0, 1.0)
        cov, length = marginal_stats(pred, d)
        l, u = pred.predict(d.X)
        rows = [(li <= yi <= ui, ui - li) for li, ui, yi in zip(l, u, d.y)]
        assert cov == np.mean([r[0] for r in rows])
        assert length == np.mean([r[1] for r in rows])


class TestReliabilityDiagram:
    def test_single_bin_hand_case(self):
        diag = reliability_diagram([0.6, 0.8], [1, 1], 1)
        assert diag.mean_confidence[0] == pytest.approx(0.7)
        assert diag.empirical_accuracy[0] == 1.0
        assert diag.ece == pytest.approx(0.3)

    def test_identical_values_single_gap(self):
        labels = np.ones(10)
        diag = reliability_diagram(np.full(10, 0.4), labels, 2)
        assert diag.ece == pytest.approx(0.6)

    def test_bins_partition_sample(self):
        g = np.random.default_rng(3)
        etas = g.uniform(size=47)
        labels = g.integers(0, 2, size=47)
        diag = reliability_diagram(etas, labels, 10)
        assert diag.counts.sum() == 47
        recomputed = np.sum(diag.counts / 47 *
                            np.abs(diag.empirical_accuracy - diag.mean_confidence))
        assert recomputed == diag.ece

    def test_perfectly_calibrated_simulation(self):
        g = np.random.default_rng(4)
        etas = g.uniform(0.05, 0.95, size=10_000)
        labels = (g.uniform(size=10_000) < etas).astype(float)
        assert reliability_diagram(etas, labels, 10).ece <= 0.02

    def test_needs_enough_points(self):
        with pytest.raises(ValueError):
            reliability_diagram([0.5], [1], 2)
