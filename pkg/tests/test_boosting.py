import numpy as np
import pytest

from cpaudit.learners import GradientBoosting, RegressionTree
from cpaudit.quantiles import weighted_quantile


def test_zero_trees_squared_is_mean():
    g = np.random.default_rng(0)
    X = g.normal(size=(20, 2))
    y = g.normal(size=20)
    model = GradientBoosting(loss="squared", trees=0).fit(X, y)
    assert np.allclose(model.predict(X), y.mean())


def test_zero_trees_pinball_is_sample_median():
    g = np.random.default_rng(1)
    X = g.normal(size=(21, 1))
    y = g.normal(size=21)
    model = GradientBoosting(loss="pinball", tau=0.5, trees=0).fit(X, y)
    assert model.predict(X)[0] == np.median(y)


def test_pinball_constant_matches_weighted_quantile_convention():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    model = GradientBoosting(loss="pinball", tau=0.25, trees=0).fit(np.zeros((4, 1)), y)
    assert model.predict(np.zeros((1, 1)))[0] == weighted_quantile(y, np.ones(4), 0.25)


def test_logistic_separable_reaches_full_accuracy():
    g = np.random.default_rng(2)
    X = np.sort(g.normal(size=(40, 1)), axis=0)
    labels = (X[:, 0] > 0).astype(float)
    model = GradientBoosting(loss="logistic", trees=50, lr=0.1, max_depth=2).fit(X, labels)
    assert np.mean((model.predict_proba(X) > 0.5) == labels) == 1.0


def test_squared_lr1_single_deep_tree_reproduces_tree_fit():
    g = np.random.default_rng(3)
    X = g.normal(size=(30, 2))
    y = g.normal(size=30)
    boosted = GradientBoosting(loss="squared", trees=1, lr=1.0, max_depth=None).fit(X, y)
    tree = RegressionTree(max_depth=-1).fit(X, y - y.mean())
    assert np.allclose(boosted.predict(X), y.mean() + tree.predict(X), atol=1e-12)


def test_single_class_logistic_flagged_constant():
    model = GradientBoosting(loss="logistic", trees=10).fit(np.zeros((6, 1)), np.ones(6))
    assert model.degenerate
    assert np.allclose(model.predict_proba(np.zeros((3, 1))), 1 - 1e-6)


def test_pinball_tracks_conditional_quantile():
    g = np.random.default_rng(4)
    X = g.uniform(-1, 1, size=(800, 1))
    y = 2 * X[:, 0] + (0.5 + np.abs(X[:, 0])) * g.normal(size=800)
    model = GradientBoosting(loss="pinball", tau=0.9, trees=150, lr=0.1,
                             max_depth=2, min_leaf=20).fit(X, y)
    frac_below = np.mean(y <= model.predict(X))
    assert 0.85 <= frac_below <= 0.95


def test_validation():
    with pytest.raises(ValueError):
        GradientBoosting(loss="huber")
    with pytest.raises(ValueError):
        GradientBoosting(loss="pinball")  # tau missing
    with pytest.raises(ValueError):
        GradientBoosting(lr=0.0)
    with pytest.raises(ValueError):
        GradientBoosting(trees=-1)
    with pytest.raises(ValueError):
        GradientBoosting().fit(np.zeros((0, 1)), np.zeros(0))
