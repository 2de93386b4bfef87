import numpy as np
import pytest

from cpaudit.data import Dataset
from cpaudit.learners import LogisticClassifier, OLSRegressor, SingularDesignError, fit_ols


class TestOLS:
    def test_exact_line(self):
        X = np.arange(5, dtype=float).reshape(-1, 1)
        y = 2 * X[:, 0] + 1
        model = fit_ols(Dataset(X, y))
        assert np.allclose(model.coef_, [1.0, 2.0], atol=1e-12)

    def test_zero_column_falls_back_to_mean(self):
        g = np.random.default_rng(1)
        X = np.zeros((10, 1))
        y = g.normal(size=10)
        model = fit_ols(Dataset(X, y))
        assert model.ridge_fallback
        assert np.allclose(model.predict(X), y.mean(), atol=1e-4)

    def test_singular_without_fallback(self):
        X = np.zeros((10, 1))
        with pytest.raises(SingularDesignError):
            OLSRegressor(allow_fallback=False).fit(X, np.arange(10.0))

    def test_matches_normal_equations(self):
        # brute-force oracle: solve (Z'Z) beta = Z'y directly
        g = np.random.default_rng(2)
        X = g.normal(size=(20, 3))
        y = g.normal(size=20)
        model = fit_ols(Dataset(X, y))
        Z = np.column_stack([np.ones(20), X])
        beta = np.linalg.solve(Z.T @ Z, Z.T @ y)
        assert np.allclose(model.coef_, beta, atol=1e-8)

    def test_needs_enough_rows(self):
        with pytest.raises(ValueError):
            fit_ols(Dataset(np.zeros((3, 3)), np.zeros(3)))


class TestLogistic:
    def test_symmetric_constant_features(self):
        X = np.zeros((20, 2))
        labels = np.array([0.0, 1.0] * 10)
        clf = LogisticClassifier(l2=0.1).fit(X, labels)
        assert np.allclose(clf.predict_proba(X), 0.5, atol=1e-6)

    def test_monotone_in_separable_1d(self):
        X = np.linspace(-2, 2, 30).reshape(-1, 1)
        labels = (X[:, 0] > 0).astype(float)
        clf = LogisticClassifier(l2=0.0).fit(X, labels)
        p = clf.predict_proba(X)
        assert np.all(np.diff(p) >= 0)

    def test_single_class_constant(self):
        clf = LogisticClassifier().fit(np.zeros((5, 1)), np.ones(5))
        assert clf.degenerate
        assert np.allclose(clf.predict_proba(np.zeros((3, 1))), 1 - 1e-6)

    @staticmethod
    def _fd_gradient(clf, X, labels, beta, eps=1e-5):
        grad = np.empty_like(beta)
        for j in range(beta.size):
            up, dn = beta.copy(), beta.copy()
            up[j] += eps
            dn[j] -= eps
            grad[j] = (clf.penalized_ll(X, labels, up)
                       - clf.penalized_ll(X, labels, dn)) / (2 * eps)
        return grad

    def test_gradient_zero_at_optimum(self):
        g = np.random.default_rng(5)
        X = g.normal(size=(40, 2))
        labels = (X[:, 0] + 0.5 * g.normal(size=40) > 0).astype(float)
        clf = LogisticClassifier(l2=0.5).fit(X, labels)
        assert np.max(np.abs(clf.penalized_grad(X, labels))) <= 1e-6

    def test_analytic_gradient_matches_finite_differences(self):
        # central differences, step 1e-5, relative tolerance 1e-4, at a
        # non-stationary point where the comparison is well conditioned
        g = np.random.default_rng(6)
        X = g.normal(size=(30, 3))
        labels = (X[:, 1] > 0.2).astype(float)
        clf = LogisticClassifier(l2=0.3).fit(X, labels)
        beta = clf.coef_ + 0.37
        analytic = clf.penalized_grad(X, labels, beta)
        fd = self._fd_gradient(clf, X, labels, beta)
        assert np.allclose(analytic, fd, rtol=1e-4, atol=1e-7)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError):
            LogisticClassifier(l2=-1.0)
