import math

import numpy as np
import pytest
from scipy import stats

from cpaudit.distributions import (
    noise_cdf,
    noise_quantile,
    normal_cdf,
    normal_quantile,
    student_t_cdf,
    student_t_quantile,
    t2_cdf,
    t2_quantile,
)


class TestNormal:
    def test_cdf_at_zero_exact(self):
        assert normal_cdf(0.0) == 0.5

    def test_symmetry(self):
        xs = np.linspace(-8, 8, 101)
        assert np.all(np.abs(normal_cdf(xs) + normal_cdf(-xs) - 1.0) <= 1e-12)

    def test_reference_value(self):
        # high-precision table value for the 95th percentile point
        assert abs(normal_cdf(1.6449) - 0.95) <= 1e-4

    def test_quantile_inverts_cdf(self):
        for p in (0.01, 0.1, 0.5, 0.9, 0.975):
            assert abs(normal_cdf(normal_quantile(p)) - p) < 1e-12


class TestT2:
    def test_closed_form_midpoint(self):
        assert t2_cdf(0.0) == 0.5

    def test_symmetry_exact(self):
        xs = np.linspace(-50, 50, 41)
        assert np.all(t2_cdf(xs) + t2_cdf(-xs) == 1.0)

    def test_known_value(self):
        # F(sqrt(2)) = 1/2 + sqrt(2)/(2*2)
        assert abs(t2_cdf(math.sqrt(2)) - (0.5 + math.sqrt(2) / 4)) < 1e-15

    def test_quantile_inverts(self):
        for p in (0.05, 0.3, 0.5, 0.77, 0.99):
            assert abs(t2_cdf(t2_quantile(p)) - p) < 1e-12

    def test_matches_scipy(self):
        xs = np.linspace(-5, 5, 21)
        assert np.allclose(t2_cdf(xs), stats.t.cdf(xs, df=2), atol=1e-12)


class TestStudentT:
    def test_median_is_zero(self):
        for df in (1, 2, 5, 30, 200):
            assert student_t_quantile(0.5, df) == 0.0

    def test_cdf_against_scipy(self):
        for df in (1, 3, 10, 100):
            xs = np.linspace(-4, 4, 17)
            ours = [student_t_cdf(float(x), df) for x in xs]
            assert np.allclose(ours, stats.t.cdf(xs, df=df), atol=1e-12)

    def test_quantile_against_scipy(self):
        for df in (2, 5, 17, 120):
            for p in (0.025, 0.2, 0.8, 0.95, 0.995):
                assert abs(student_t_quantile(p, df) - stats.t.ppf(p, df)) < 1e-8

    def test_large_df_approaches_normal(self):
        assert abs(student_t_quantile(0.95, 10_000) - 1.6449) < 1e-2

    def test_invalid_p(self):
        with pytest.raises(ValueError):
            student_t_quantile(0.0, 5)


def test_noise_family_dispatch():
    assert noise_cdf(0.0, "standard-normal") == 0.5
    assert noise_cdf(0.0, "student-t2") == 0.5
    assert abs(noise_quantile(0.95, "standard-normal") - 1.6449) < 1e-3
    with pytest.raises(ValueError):
        noise_cdf(0.0, "cauchy")
