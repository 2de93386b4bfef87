import numpy as np

from cpaudit.data import Dataset
from cpaudit.learners import Forest, RegressionTree, fit_forest
from cpaudit.quantiles import weighted_quantile
from cpaudit.rng import RngStream


class TestRegressionTree:
    def test_step_function_split_at_straddling_midpoint(self):
        # oracle: enumerate every candidate midpoint and pick min total SSE
        X = np.array([[-2.0], [-1.2], [-0.4], [0.6], [1.3], [2.2]])
        y = np.where(X[:, 0] < 0, 0.0, 1.0)
        tree = RegressionTree(max_depth=1).fit(X, y)
        xs = np.sort(X[:, 0])
        best_sse, best_thr = np.inf, None
        for i in range(len(xs) - 1):
            thr = 0.5 * (xs[i] + xs[i + 1])
            left, right = y[X[:, 0] <= thr], y[X[:, 0] > thr]
            sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            if sse < best_sse:
                best_sse, best_thr = sse, thr
        assert tree.feature[0] == 0
        assert tree.threshold[0] == best_thr == 0.5 * (-0.4 + 0.6)

    def test_depth_zero_is_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(20, 2))
        y = X[:, 0]
        tree = RegressionTree(max_depth=0).fit(X, y)
        assert tree.n_nodes == 1
        assert np.allclose(tree.predict(X), y.mean())

    def test_min_leaf_respected(self):
        g = np.random.default_rng(1)
        X = g.normal(size=(50, 2))
        tree = RegressionTree(min_leaf=7).fit(X, g.normal(size=50))
        leaves, counts = np.unique(tree.row_leaf, return_counts=True)
        assert counts.min() >= 7

    def test_weighted_fit_reduces_to_duplication(self):
        # integer weights must act exactly like repeating rows
        g = np.random.default_rng(2)
        X = g.normal(size=(15, 2))
        y = g.normal(size=15)
        w = g.integers(1, 4, size=15).astype(float)
        t_weighted = RegressionTree(max_depth=3).fit(X, y, sample_weight=w)
        X_rep = np.repeat(X, w.astype(int), axis=0)
        y_rep = np.repeat(y, w.astype(int))
        t_rep = RegressionTree(max_depth=3).fit(X_rep, y_rep)
        probe = g.normal(size=(30, 2))
        assert np.allclose(t_weighted.predict(probe), t_rep.predict(probe), atol=1e-9)


class TestForest:
    def test_constant_response(self):
        g = np.random.default_rng(3)
        d = Dataset(g.normal(size=(40, 3)), np.full(40, 2.5))
        f = fit_forest(d, trees=20, rng=RngStream(0))
        assert np.allclose(f.predict(g.normal(size=(10, 3))), 2.5)

    def test_single_leaf_quantile_is_weighted_median(self):
        # one tree, depth 0: the leaf holds the whole bootstrap sample
        d = Dataset(np.zeros((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]))
        f = Forest(trees=1, max_depth=0, rng=RngStream(5)).fit(d.X, d.y)
        vals, wts = f.leaf_multiset(np.zeros(1))
        assert f.quantile(np.zeros((1, 1)), 0.5)[0] == weighted_quantile(vals, wts, 0.5)

    def test_quantile_tau_to_zero_gives_minimum(self):
        g = np.random.default_rng(6)
        d = Dataset(g.normal(size=(30, 2)), g.normal(size=30))
        f = fit_forest(d, trees=5, min_leaf=3, rng=RngStream(1))
        x = g.normal(size=2)
        vals, _ = f.leaf_multiset(x)
        assert f.quantile(x.reshape(1, -1), 1e-9)[0] == vals.min()

    def test_quantile_matches_materialized_multiset_oracle(self):
        g = np.random.default_rng(7)
        d = Dataset(g.normal(size=(25, 2)), g.normal(size=25))
        f = fit_forest(d, trees=6, min_leaf=2, max_features=1, rng=RngStream(2))
        for tau in (0.1, 0.5, 0.9):
            for x in g.normal(size=(8, 2)):
                vals, wts = f.leaf_multiset(x)
                assert vals.size <= 200
                assert f.quantile(x.reshape(1, -1), tau)[0] == weighted_quantile(vals, wts, tau)

    def test_leaf_samples_reconstruct_bootstrap(self):
        g = np.random.default_rng(8)
        d = Dataset(g.normal(size=(20, 2)), g.normal(size=20))
        f = fit_forest(d, trees=3, rng=RngStream(9))
        for b in range(3):
            stream = f.rng.child(("tree", b))
            boot = stream.generator().integers(0, 20, size=20)
            assert sorted(f.leaf_vals_[b].tolist()) == sorted(d.y[boot].tolist())

    def test_deterministic_given_stream(self):
        g = np.random.default_rng(10)
        d = Dataset(g.normal(size=(30, 3)), g.normal(size=30))
        probe = g.normal(size=(5, 3))
        a = fit_forest(d, trees=10, max_features=2, rng=RngStream(4)).predict(probe)
        b = fit_forest(d, trees=10, max_features=2, rng=RngStream(4)).predict(probe)
        assert np.array_equal(a, b)
