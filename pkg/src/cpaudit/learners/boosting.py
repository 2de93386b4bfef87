"""Stagewise gradient-boosted trees for squared, pinball and logistic losses."""

from __future__ import annotations

import math

import numpy as np

from ..quantiles import weighted_quantile
from ._tree import RegressionTree
from .linear import PROB_CLAMP, _sigmoid, clamp_proba

LOSSES = ("squared", "pinball", "logistic")


class GradientBoosting:
    """Additive tree model: constant initial fit plus shrunken gradient trees.

    Each stage fits a regression tree to the negative gradient of the chosen
    loss at the current prediction: residuals for squared error, tau - 1{y <
    F} for pinball, y - sigmoid(F) for logistic. Leaf values are then
    re-optimized for the actual loss (mean gradient is already optimal for
    squared error; pinball leaves take the tau-quantile of the in-leaf
    residuals, logistic leaves a Newton step), without which the bounded
    pinball/logistic gradients make convergence impractically slow. The
    initial constant is the loss minimizer (mean, tau-quantile, log-odds).
    `trees=0` is allowed and yields the constant model.
    """

    def __init__(self, loss: str = "squared", tau: float = None, trees: int = 100,
                 lr: float = 0.1, max_depth: int = 3, min_leaf: int = 1):
        if loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {loss!r}")
        if loss == "pinball":
            if tau is None or not 0.0 < tau < 1.0:
                raise ValueError("pinball loss needs tau in (0, 1)")
        if not 0.0 < lr <= 1.0:
            raise ValueError(f"learning rate must be in (0, 1], got {lr}")
        if trees < 0:
            raise ValueError("trees must be >= 0")
        self.loss = loss
        self.tau = tau
        self.n_trees = int(trees)
        self.lr = float(lr)
        self.max_depth = -1 if max_depth is None else int(max_depth)
        self.min_leaf = int(min_leaf)
        self.degenerate = False

    @property
    def family(self):
        return f"gbt-{self.loss}"

    def _init_constant(self, y, w):
        if self.loss == "squared":
            return float(np.average(y, weights=w))
        if self.loss == "pinball":
            return weighted_quantile(y, w, self.tau)
        p = float(np.average(y, weights=w))
        p = min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)
        return math.log(p / (1.0 - p))

    def _negative_gradient(self, y, F):
        if self.loss == "squared":
            return y - F
        if self.loss == "pinball":
            return self.tau - (y < F).astype(float)
        return y - _sigmoid(F)

    def fit(self, X, y, sample_weight=None):
        X = np.ascontiguousarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if y.shape[0] == 0:
            raise ValueError("empty training data")
        w = np.ones(y.shape[0]) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if self.loss == "logistic" and len(np.unique(y)) < 2:
            self.degenerate = True
            self.const_proba_ = float(clamp_proba(np.atleast_1d(y.mean()))[0])
            self.init_ = math.log(self.const_proba_ / (1.0 - self.const_proba_))
            self.trees_ = []
            return self
        self.init_ = self._init_constant(y, w)
        F = np.full(y.shape[0], self.init_)
        self.trees_ = []
        for _ in range(self.n_trees):
            g = self._negative_gradient(y, F)
            tree = RegressionTree(max_depth=self.max_depth, min_leaf=self.min_leaf)
            tree.fit(X, g, sample_weight=w)
            self._reoptimize_leaves(tree, y, F, w)
            F = F + self.lr * tree.value[tree.row_leaf]
            self.trees_.append(tree)
        return self

    def _reoptimize_leaves(self, tree, y, F, w):
        if self.loss == "squared":
            return  # mean of residuals is already the optimal leaf step
        leaves = tree.row_leaf
        if self.loss == "pinball":
            resid = y - F
            for leaf in np.unique(leaves):
                sel = leaves == leaf
                tree.value[leaf] = weighted_quantile(resid[sel], w[sel], self.tau)
            return
        p = _sigmoid(F)
        num = np.bincount(leaves, weights=w * (y - p), minlength=tree.n_nodes)
        den = np.bincount(leaves, weights=w * p * (1.0 - p), minlength=tree.n_nodes)
        for leaf in np.unique(leaves):
            tree.value[leaf] = num[leaf] / max(den[leaf], 1e-12)

    def predict_raw(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        F = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            F = F + self.lr * tree.predict(X)
        return F

    def predict(self, X) -> np.ndarray:
        if self.loss == "logistic":
            raise ValueError("use predict_proba for the logistic loss")
        return self.predict_raw(X)

    def predict_proba(self, X) -> np.ndarray:
        if self.loss != "logistic":
            raise ValueError("predict_proba is only defined for the logistic loss")
        X = np.asarray(X, dtype=float)
        if self.degenerate:
            return np.full(X.shape[0], self.const_proba_)
        return clamp_proba(_sigmoid(self.predict_raw(X)))


def fit_gbt(X, y, loss: str = "squared", tau: float = None, trees: int = 100,
            lr: float = 0.1, max_depth: int = 3, min_leaf: int = 1,
            sample_weight=None) -> GradientBoosting:
    model = GradientBoosting(loss=loss, tau=tau, trees=trees, lr=lr,
                             max_depth=max_depth, min_leaf=min_leaf)
    return model.fit(X, y, sample_weight=sample_weight)
