"""Reliability-estimator training on coverage indicators.

The estimator answers "with what probability does this interval method cover
at x?". It is built by repeating K times: randomly split the data, fit the
interval method on one side, record binary coverage hits on the other, train
a calibrated probabilistic classifier on those hits, and finally average the
K members.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .conformal import MethodConfig, fit_method
from .data import Dataset, kfold, split
from .learners import (
    LearnerConfig,
    classifier_candidates,
    fit_classifier,
    make_calibrator,
    select_learner,
)
from .rng import RngStream


@dataclass(frozen=True)
class CoverageLabels:
    """Binary coverage indicators for one evaluation split."""

    X: np.ndarray
    indicators: np.ndarray
    split_id: int = 0

    @property
    def n(self) -> int:
        return self.indicators.shape[0]


def generate_labels(pred, eval_set: Dataset, split_id: int = 0) -> CoverageLabels:
    """Indicator of y landing inside the closed predicted interval, per row."""
    l, u = pred.predict(eval_set.X)
    covered = ((l <= eval_set.y) & (eval_set.y <= u)).astype(float)
    return CoverageLabels(eval_set.X.copy(), covered, split_id)


@dataclass(frozen=True)
class EstimatorConfig:
    """How each reliability member is trained and calibrated.

    `learner` is either a fixed LearnerConfig or one of the search modes
    "auto" (full candidate grid), "auto-logistic", "auto-gbt" (single-family
    grids). `rho` is the train share of each split and `K` the number of
    splits to ensemble.
    """

    learner: object = "auto"
    calibration: str = "isotonic"
    n_bins: int = 10
    K: int = 5
    rho: float = 0.5
    preset: str = "baseline"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")


def estimator_preset(name: str, **overrides) -> EstimatorConfig:
    """Named configurations used by the robustness harness.

    `baseline` searches the full grid with isotonic calibration; the
    `uncalibrated` / `platt` / `binning` variants change only the calibration
    step; `logistic-only` and `tuned-gbt` restrict the hypothesis space;
    `forest-small` and `forest-mid` pin fixed-capacity forests with no tuning.
    """
    presets = {
        "baseline": dict(learner="auto", calibration="isotonic"),
        "uncalibrated": dict(learner="auto", calibration="none"),
        "platt": dict(learner="auto", calibration="platt"),
        "binning": dict(learner="auto", calibration="binning", n_bins=10),
        "logistic-only": dict(learner="auto-logistic", calibration="isotonic"),
        "forest-small": dict(
            learner=LearnerConfig.make("forest-classifier", trees=50, max_depth=3,
                                       min_leaf=5, max_features=None),
            calibration="isotonic"),
        "forest-mid": dict(
            learner=LearnerConfig.make("forest-classifier", trees=100, max_depth=6,
                                       min_leaf=5, max_features=None),
            calibration="isotonic"),
        "tuned-gbt": dict(learner="auto-gbt", calibration="isotonic"),
    }
    if name not in presets:
        raise ValueError(f"unknown estimator preset {name!r}; know {sorted(presets)}")
    kwargs = dict(presets[name])
    kwargs.update(overrides)
    return EstimatorConfig(preset=name, **kwargs)


class ReliabilityMember:
    """One calibrated classifier trained on a single split's coverage labels."""

    def __init__(self, classifier, calibrator, learner_config, flags=(),
                 constant: float = None, cv_folds: int = None,
                 labels: CoverageLabels = None, stream: RngStream = None):
        self.classifier = classifier
        self.calibrator = calibrator
        self.learner_config = learner_config
        self.flags = list(flags)
        self.constant = constant
        self.cv_folds = cv_folds
        self.labels = labels    # retained for serialization-by-refit
        self.stream = stream

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.constant is not None:
            return np.full(X.shape[0], self.constant)
        raw = self.classifier.predict_proba(X)
        return np.clip(self.calibrator.transform(raw), 0.0, 1.0)


def _class_weights(indicators: np.ndarray) -> np.ndarray:
    n = indicators.shape[0]
    n_pos = indicators.sum()
    n_neg = n - n_pos
    w = np.where(indicators > 0.5, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return w


def _candidate_grid(learner, p: int):
    if learner == "auto":
        return classifier_candidates(p)
    if learner == "auto-logistic":
        return [c for c in classifier_candidates(p) if c.family == "logistic"]
    if learner == "auto-gbt":
        return [c for c in classifier_candidates(p) if c.family == "gbt-logistic"]
    raise ValueError(f"unknown learner search mode {learner!r}")


def fit_member(labels: CoverageLabels, est: EstimatorConfig,
               rng: RngStream) -> ReliabilityMember:
    """Select, fit and cross-fit-calibrate a classifier on one label set.

    Single-class labels yield a constant-probability member (clamped mean)
    with a warning rather than a failure.
    """
    I = labels.indicators
    classes = np.unique(I)
    if classes.size < 2:
        warnings.warn("single-class coverage labels; member is a constant", stacklevel=2)
        const = float(np.clip(I.mean(), 1e-6, 1.0 - 1e-6))
        return ReliabilityMember(None, None, None, flags=["single-class"],
                                 constant=const, labels=labels, stream=rng)

    minority = int(min(I.sum(), labels.n - I.sum()))
    folds = max(2, min(5, minority))
    weights = _class_weights(I)
    labelled = Dataset(labels.X, I)

    if isinstance(est.learner, LearnerConfig):
        config = est.learner
    else:
        config = select_learner(labelled, _candidate_grid(est.learner, labels.X.shape[1]),
                                folds=folds, rng=rng.child("select"), task="classification")

    # cross-fitted calibration: out-of-fold raw scores feed the calibrator
    calibrator = make_calibrator(est.calibration, n_bins=est.n_bins)
    if est.calibration != "none":
        cal_folds = kfold(labelled, 2, rng.child("calib-folds"))
        raw_oof = np.empty(labels.n)
        all_idx = np.arange(labels.n)
        for f_i, hold in enumerate(cal_folds):
            fit_idx = np.setdiff1d(all_idx, hold, assume_unique=True)
            clf = fit_classifier(config, labels.X[fit_idx], I[fit_idx],
                                 sample_weight=weights[fit_idx],
                                 rng=rng.child(("calib-fit", f_i)))
            raw_oof[hold] = clf.predict_proba(labels.X[hold])
        calibrator.fit(raw_oof, I)
    classifier = fit_classifier(config, labels.X, I, sample_weight=weights,
                                rng=rng.child("final-fit"))
    return ReliabilityMember(classifier, calibrator, config, cv_folds=folds,
                             labels=labels, stream=rng)


class ReliabilityEstimator:
    """Ensemble of split members; the estimate is their arithmetic mean."""

    def __init__(self, members, config: EstimatorConfig, alpha: float,
                 cp_config: MethodConfig = None):
        if not members:
            raise ValueError("need at least one member")
        self.members = list(members)
        self.config = config
        self.alpha = alpha
        self.cp_config = cp_config

    @property
    def K(self) -> int:
        return len(self.members)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([m.predict(X) for m in self.members], axis=0)


def cpa_train(d: Dataset, alpha: float, cp_config: MethodConfig,
              est: EstimatorConfig, rng: RngStream) -> ReliabilityEstimator:
    """Train the K-member reliability ensemble for one interval method.

    Per split: partition with ratio rho, fit the interval method on the train
    side, label coverage on the eval side, fit a calibrated member on those
    labels. Raises only if every split fails outright.
    """
    members = []
    errors = []
    for k in range(est.K):
        stream = rng.child(("cpa-split", k))
        try:
            plan = split(d, est.rho, stream.child("partition"))
            train = d.subset(plan.train_indices)
            evl = d.subset(plan.eval_indices)
            predictor = fit_method(cp_config, train, alpha, stream.child("cp"))
            labels = generate_labels(predictor, evl, split_id=k)
            members.append(fit_member(labels, est, stream.child("member")))
        except Exception as exc:  # noqa: BLE001 - collected and re-raised below
            errors.append((k, exc))
    if not members:
        raise RuntimeError(f"all {est.K} reliability splits failed: {errors[:3]}")
    if errors:
        warnings.warn(f"{len(errors)} of {est.K} reliability splits failed", stacklevel=2)
    return ReliabilityEstimator(members, est, alpha, cp_config=cp_config)


def predict_reliability(est: ReliabilityEstimator, x) -> np.ndarray:
    """Ensemble-averaged coverage probability at one point or a batch."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(est.predict(x.reshape(1, -1))[0])
    return est.predict(x)
