"""Bagged regression forests that retain leaf samples for quantile queries."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..quantiles import weighted_quantile
from ..rng import RngStream
from ._tree import NO_DEPTH_LIMIT, RegressionTree
from .linear import clamp_proba


class Forest:
    """Bootstrap ensemble of exact-greedy CART trees.

    Each tree keeps the response values of its bootstrap sample grouped by
    leaf, so conditional quantiles can be read off the pooled leaf multiset:
    a sample sitting in leaf L_b(x) of tree b carries weight 1/(B * |L_b(x)|).
    """

    family = "forest"

    def __init__(self, trees: int, max_depth=None, min_leaf: int = 1,
                 max_features=None, rng: RngStream = None):
        if trees < 1:
            raise ValueError("need at least one tree")
        if min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        self.n_trees = int(trees)
        self.max_depth = max_depth
        self.min_leaf = int(min_leaf)
        self.max_features = max_features
        self.rng = rng if rng is not None else RngStream(0)

    def fit(self, X, y, sample_weight=None):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.ascontiguousarray(y, dtype=float)
        n = X.shape[0]
        depth = NO_DEPTH_LIMIT if self.max_depth is None else int(self.max_depth)
        self.trees_ = []
        self.leaf_vals_ = []   # per tree: bootstrap y values grouped by leaf
        self.leaf_wts_ = []    # matching sample weights, grouped identically
        self.leaf_start_ = []  # per tree: leaf id -> [start, end) into leaf_vals_
        self.leaf_end_ = []
        for b in range(self.n_trees):
            stream = self.rng.child(("tree", b))
            boot = stream.generator().integers(0, n, size=n)
            seed = stream.child("splits").stream_id
            tree = RegressionTree(max_depth=depth, min_leaf=self.min_leaf,
                                  max_features=self.max_features, seed=seed)
            w_boot = None if sample_weight is None else np.asarray(sample_weight, float)[boot]
            tree.fit(X[boot], y[boot], sample_weight=w_boot)
            order = np.argsort(tree.row_leaf, kind="stable")
            sorted_leaves = tree.row_leaf[order]
            start = np.searchsorted(sorted_leaves, np.arange(tree.n_nodes), side="left")
            end = np.searchsorted(sorted_leaves, np.arange(tree.n_nodes), side="right")
            self.trees_.append(tree)
            self.leaf_vals_.append(y[boot][order])
            self.leaf_wts_.append(np.ones(n) if w_boot is None else w_boot[order])
            self.leaf_start_.append(start)
            self.leaf_end_.append(end)
        return self

    def _leaf_ids(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return np.stack([t.apply(X) for t in self.trees_])  # (B, n_query)

    def predict(self, X) -> np.ndarray:
        leaves = self._leaf_ids(X)
        preds = np.stack([t.value[leaves[b]] for b, t in enumerate(self.trees_)])
        return preds.mean(axis=0)

    def leaf_multiset(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Pooled (values, weights) multiset behind the quantile at one point."""
        leaves = self._leaf_ids(np.asarray(x, dtype=float).reshape(1, -1))[:, 0]
        vals, wts = [], []
        for b in range(self.n_trees):
            s = self.leaf_start_[b][leaves[b]]
            e = self.leaf_end_[b][leaves[b]]
            leaf_v = self.leaf_vals_[b][s:e]
            vals.append(leaf_v)
            wts.append(np.full(leaf_v.shape[0], 1.0 / (self.n_trees * leaf_v.shape[0])))
        return np.concatenate(vals), np.concatenate(wts)

    def quantile(self, X, tau: float) -> np.ndarray:
        """Pooled-leaf weighted quantile at each query row."""
        if not 0.0 < tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {tau}")
        X = np.ascontiguousarray(X, dtype=float)
        leaves = self._leaf_ids(X)
        # flatten per-tree leaf stores once so each query gathers with one take
        val_off = np.cumsum([0] + [v.shape[0] for v in self.leaf_vals_])
        node_off = np.cumsum([0] + [t.n_nodes for t in self.trees_])
        all_vals = np.concatenate(self.leaf_vals_)
        start_flat = np.concatenate(
            [self.leaf_start_[b] + val_off[b] for b in range(self.n_trees)])
        end_flat = np.concatenate(
            [self.leaf_end_[b] + val_off[b] for b in range(self.n_trees)])
        out = np.empty(X.shape[0])
        for i in range(X.shape[0]):
            flat_ids = node_off[:-1] + leaves[:, i]
            starts = start_flat[flat_ids]
            ends = end_flat[flat_ids]
            counts = ends - starts
            total = int(counts.sum())
            gather = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
            gather += np.arange(total)
            vals = all_vals[gather]
            wts = np.repeat(1.0 / (self.n_trees * counts), counts)
            out[i] = weighted_quantile(vals, wts, tau)
        return out


def fit_forest(train: Dataset, trees: int, max_depth=None, min_leaf: int = 1,
               max_features=None, rng: RngStream = None) -> Forest:
    return Forest(trees, max_depth=max_depth, min_leaf=min_leaf,
                  max_features=max_features, rng=rng).fit(train.X, train.y)


class ForestClassifier:
    """Probability forest: regression trees on 0/1 labels, averaged and clamped."""

    family = "forest-classifier"

    def __init__(self, trees: int, max_depth=None, min_leaf: int = 1,
                 max_features=None, rng: RngStream = None):
        self._forest = Forest(trees, max_depth=max_depth, min_leaf=min_leaf,
                              max_features=max_features, rng=rng)
        self.degenerate = False

    def fit(self, X, labels, sample_weight=None):
        labels = np.asarray(labels, dtype=float)
        if len(np.unique(labels)) < 2:
            self.degenerate = True
            self.const_ = float(clamp_proba(np.atleast_1d(labels.mean()))[0])
            return self
        self._forest.fit(X, labels, sample_weight=sample_weight)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.degenerate:
            return np.full(X.shape[0], self.const_)
        return clamp_proba(self._forest.predict(X))
