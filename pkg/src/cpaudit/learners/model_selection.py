"""Learner configuration grids and cross-validated selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data import Dataset, kfold
from ..rng import RngStream
from .boosting import GradientBoosting
from .forest import Forest, ForestClassifier
from .knn import KNNRegressor
from .linear import LogisticClassifier, OLSRegressor, clamp_proba


@dataclass(frozen=True)
class LearnerConfig:
    """A learner family plus its hyperparameters, hashable for caching."""

    family: str
    params: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return dict(self.params)

    @staticmethod
    def make(family: str, **params) -> "LearnerConfig":
        return LearnerConfig(family, tuple(sorted(params.items())))


def regressor_candidates(p: int) -> list[LearnerConfig]:
    """Default regression grid: OLS, two k-NN sizes, two forest depths."""
    mtry = max(1, p // 3)
    return [
        LearnerConfig.make("ols"),
        LearnerConfig.make("knn", k=5),
        LearnerConfig.make("knn", k=20),
        LearnerConfig.make("forest", trees=200, max_depth=None, min_leaf=5, max_features=mtry),
        LearnerConfig.make("forest", trees=200, max_depth=10, min_leaf=5, max_features=mtry),
    ]


def classifier_candidates(p: int) -> list[LearnerConfig]:
    """Default classification grid spanning linear, bagged and boosted models."""
    mtry = max(1, int(math.ceil(math.sqrt(p))))
    grid = [
        LearnerConfig.make("logistic", l2=0.01),
        LearnerConfig.make("logistic", l2=1.0),
    ]
    for trees in (100, 300):
        for depth in (None, 6):
            grid.append(LearnerConfig.make(
                "forest-classifier", trees=trees, max_depth=depth, min_leaf=5, max_features=mtry))
    for trees in (100, 200):
        for lr in (0.05, 0.1):
            for depth in (3, 5):
                grid.append(LearnerConfig.make(
                    "gbt-logistic", trees=trees, lr=lr, max_depth=depth))
    return grid


def make_regressor(config: LearnerConfig, rng: RngStream = None):
    params = config.as_dict()
    if config.family == "ols":
        return OLSRegressor()
    if config.family == "knn":
        return KNNRegressor(**params)
    if config.family == "forest":
        return Forest(rng=rng if rng is not None else RngStream(0), **params)
    if config.family.startswith("gbt"):
        loss = config.family.split("-", 1)[1] if "-" in config.family else "squared"
        return GradientBoosting(loss=loss, **params)
    raise ValueError(f"unknown regressor family {config.family!r}")


def make_classifier(config: LearnerConfig, rng: RngStream = None):
    params = config.as_dict()
    if config.family == "logistic":
        return LogisticClassifier(**params)
    if config.family == "forest-classifier":
        return ForestClassifier(rng=rng if rng is not None else RngStream(0), **params)
    if config.family == "gbt-logistic":
        return GradientBoosting(loss="logistic", **params)
    raise ValueError(f"unknown classifier family {config.family!r}")


def fit_regressor(config: LearnerConfig, X, y, rng: RngStream = None):
    model = make_regressor(config, rng=rng)
    if config.family == "ols":
        return model.fit(X, y)
    return model.fit(X, y)


def fit_classifier(config: LearnerConfig, X, labels, sample_weight=None, rng: RngStream = None):
    model = make_classifier(config, rng=rng)
    return model.fit(X, labels, sample_weight=sample_weight)


def log_loss(labels, proba) -> float:
    p = clamp_proba(np.asarray(proba, dtype=float))
    t = np.asarray(labels, dtype=float)
    return float(-np.mean(t * np.log(p) + (1 - t) * np.log(1 - p)))


def select_learner(data: Dataset, candidates: list[LearnerConfig], folds: int,
                   rng: RngStream, task: str = "regression") -> LearnerConfig:
    """Pick the candidate with the lowest mean out-of-fold loss.

    Loss is MSE for regression and log-loss for classification; ties keep the
    earliest candidate in the list.
    """
    if not candidates:
        raise ValueError("candidate list is empty")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    fold_sets = kfold(data, folds, rng.child("folds"))
    all_idx = np.arange(data.n)
    best_loss, best = math.inf, None
    for c_i, config in enumerate(candidates):
        losses = []
        for f_i, test_idx in enumerate(fold_sets):
            train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            stream = rng.child(("cv", c_i, f_i))
            if task == "regression":
                model = fit_regressor(config, data.X[train_idx], data.y[train_idx], rng=stream)
                pred = model.predict(data.X[test_idx])
                losses.append(float(np.mean((data.y[test_idx] - pred) ** 2)))
            else:
                model = fit_classifier(config, data.X[train_idx], data.y[train_idx], rng=stream)
                losses.append(log_loss(data.y[test_idx], model.predict_proba(data.X[test_idx])))
        mean_loss = float(np.mean(losses))
        if mean_loss < best_loss:
            best_loss, best = mean_loss, config
    return best
