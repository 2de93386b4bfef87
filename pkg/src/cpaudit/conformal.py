"""Prediction-interval constructors at a fixed miscoverage level alpha.

Split-calibrated methods (residual, studentized, CQR, LCP, RLCP) expect a
fitted base model plus a disjoint calibration set; CV+, the residual
bootstrap, QRF and the classical least-squares interval work from a single
training set. `fit_method` is the config-driven entry point that performs the
internal train/calibration split where a method needs one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, kfold, split
from .distributions import student_t_quantile
from .learners import (
    GradientBoosting,
    LearnerConfig,
    OLSRegressor,
    fit_regressor,
    regressor_candidates,
    select_learner,
)
from .quantiles import conformal_quantile, weighted_quantile
from .rng import RngStream

STUDENTIZE_EPS = 1e-6
MIN_BOOTSTRAP_DRAWS = 50


@dataclass(frozen=True)
class MethodConfig:
    """Named interval method plus keyword options (base learners, K, B, ...)."""

    name: str
    options: tuple = field(default_factory=tuple)

    def opt(self, key, default=None):
        return dict(self.options).get(key, default)

    @staticmethod
    def make(name: str, **options) -> "MethodConfig":
        return MethodConfig(name, tuple(sorted(options.items())))


class IntervalPredictor:
    """Base for fitted interval methods: maps feature rows to [l, u] pairs."""

    method = "abstract"
    conformal = True

    def __init__(self, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        self.alpha = float(alpha)
        self.flags: list[str] = []

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


def _resolve_base(base, train: Dataset, rng: RngStream):
    """Fit a mean regressor from a config, 'auto', or an already-fitted model."""
    if base is None or base == "auto":
        config = select_learner(train, regressor_candidates(train.p),
                                folds=5, rng=rng.child("base-cv"), task="regression")
        return fit_regressor(config, train.X, train.y, rng=rng.child("base-fit")), config
    if isinstance(base, LearnerConfig):
        return fit_regressor(base, train.X, train.y, rng=rng.child("base-fit")), base
    return base, None  # pre-fitted model


class CPResidual(IntervalPredictor):
    """Absolute-residual split conformal: constant-width intervals."""

    method = "cp-residual"

    def fit(self, train: Dataset, calib: Dataset, base="auto", rng: RngStream = None):
        rng = rng or RngStream(0)
        if train.n == 0 or calib.n == 0:
            raise ValueError("train and calibration sets must be non-empty")
        self.mu_, self.base_config_ = _resolve_base(base, train, rng)
        scores = np.abs(calib.y - self.mu_.predict(calib.X))
        self.qhat_ = conformal_quantile(scores, self.alpha)
        if math.isinf(self.qhat_):
            self.flags.append("infinite-width")
        return self

    def predict(self, X):
        m = self.mu_.predict(X)
        return m - self.qhat_, m + self.qhat_


class CPStudentized(IntervalPredictor):
    """Split conformal with residual scores scaled by a local dispersion fit."""

    method = "cp-studentized"

    def fit(self, train: Dataset, calib: Dataset, base="auto",
            dispersion_base=None, rng: RngStream = None):
        rng = rng or RngStream(0)
        self.mu_, self.base_config_ = _resolve_base(base, train, rng)
        abs_resid = np.abs(train.y - self.mu_.predict(train.X))
        disp_train = Dataset(train.X, abs_resid)
        if dispersion_base is None:
            dispersion_base = LearnerConfig.make(
                "forest", trees=100, max_depth=None, min_leaf=5,
                max_features=max(1, train.p // 3))
        self.sigma_, _ = _resolve_base(dispersion_base, disp_train, rng.child("dispersion"))
        sig_calib = self._sigma(calib.X)
        scores = np.abs(calib.y - self.mu_.predict(calib.X)) / sig_calib
        self.qhat_ = conformal_quantile(scores, self.alpha)
        if math.isinf(self.qhat_):
            self.flags.append("infinite-width")
        return self

    def _sigma(self, X):
        raw = self.sigma_.predict(X)
        if np.any(raw < 0):
            if "negative-dispersion-clamped" not in self.flags:
                self.flags.append("negative-dispersion-clamped")
            raw = np.maximum(raw, 0.0)
        return raw + STUDENTIZE_EPS

    def predict(self, X):
        m = self.mu_.predict(X)
        half = self.qhat_ * self._sigma(X)
        return m - half, m + half


class CQR(IntervalPredictor):
    """Conformalized quantile regression with scores
    max(q_lo - y, y - q_hi); the calibrated offset expands or contracts the
    raw quantile band. Crossed endpoints are swapped and flagged."""

    method = "cqr"

    def fit(self, train: Dataset, calib: Dataset, quantile_learner=None,
            rng: RngStream = None):
        rng = rng or RngStream(0)
        lo_tau, hi_tau = self.alpha / 2.0, 1.0 - self.alpha / 2.0
        opts = quantile_learner.as_dict() if isinstance(quantile_learner, LearnerConfig) else {}
        trees = opts.get("trees", 200)
        lr = opts.get("lr", 0.1)
        depth = opts.get("max_depth", 3)
        min_leaf = opts.get("min_leaf", 20)
        self.lo_ = GradientBoosting(loss="pinball", tau=lo_tau, trees=trees, lr=lr,
                                    max_depth=depth, min_leaf=min_leaf).fit(train.X, train.y)
        self.hi_ = GradientBoosting(loss="pinball", tau=hi_tau, trees=trees, lr=lr,
                                    max_depth=depth, min_leaf=min_leaf).fit(train.X, train.y)
        lo = self.lo_.predict(calib.X)
        hi = self.hi_.predict(calib.X)
        scores = np.maximum(lo - calib.y, calib.y - hi)
        self.qhat_ = conformal_quantile(scores, self.alpha)
        if math.isinf(self.qhat_):
            self.flags.append("infinite-width")
        return self

    def predict(self, X):
        l = self.lo_.predict(X) - self.qhat_
        u = self.hi_.predict(X) + self.qhat_
        crossed = l > u
        if np.any(crossed):
            if "cqr-crossing" not in self.flags:
                self.flags.append("cqr-crossing")
            l2 = np.where(crossed, u, l)
            u2 = np.where(crossed, l, u)
            return l2, u2
        return l, u


class CVPlus(IntervalPredictor):
    """Cross-validation+ intervals from leave-one-fold-out residuals.

    The lower endpoint is the floor((n+1) * alpha)-th smallest of the
    prediction-minus-residual multiset (or -inf when that index is zero); the
    upper is the ceil((n+1) * (1 - alpha))-th smallest of the plus multiset
    (or +inf past the end).
    """

    method = "cv-plus"

    def fit(self, train: Dataset, K: int = 5, base="auto", rng: RngStream = None):
        rng = rng or RngStream(0)
        if base == "auto" or base is None:
            base = select_learner(train, regressor_candidates(train.p),
                                  folds=5, rng=rng.child("base-cv"), task="regression")
        folds = kfold(train, K, rng.child("folds"))
        n = train.n
        self.models_ = []
        self.fold_of_row_ = np.empty(n, dtype=int)
        self.resid_ = np.empty(n)
        all_idx = np.arange(n)
        for k, test_idx in enumerate(folds):
            fit_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            if isinstance(base, LearnerConfig):
                model = fit_regressor(base, train.X[fit_idx], train.y[fit_idx],
                                      rng=rng.child(("fold-fit", k)))
            else:
                model = base  # pre-fitted: reused for every fold
            self.models_.append(model)
            self.fold_of_row_[test_idx] = k
            self.resid_[test_idx] = np.abs(
                train.y[test_idx] - model.predict(train.X[test_idx]))
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        n = self.resid_.shape[0]
        preds = np.stack([m.predict(X) for m in self.models_])       # (K, n_q)
        per_row = preds[self.fold_of_row_]                           # (n, n_q)
        minus = per_row - self.resid_[:, None]
        plus = per_row + self.resid_[:, None]
        k_lo = math.floor((n + 1) * self.alpha)
        k_hi = math.ceil((n + 1) * (1.0 - self.alpha))
        if k_lo < 1:
            l = np.full(X.shape[0], -math.inf)
        else:
            l = np.partition(minus, k_lo - 1, axis=0)[k_lo - 1]
        if k_hi > n:
            u = np.full(X.shape[0], math.inf)
        else:
            u = np.partition(plus, k_hi - 1, axis=0)[k_hi - 1]
        return l, u


class LCP(IntervalPredictor):
    """Locally weighted split conformal with Gaussian kernel exp(-d^2 / h).

    The threshold at x is the (1 - alpha) weighted quantile of the
    calibration scores under kernel weights. `bandwidth="auto"` scans a
    5-point grid around the median squared pairwise calibration distance and
    keeps the value whose leave-one-out calibration coverage is closest to
    the target; ties keep the smaller bandwidth.
    """

    method = "lcp"

    def fit(self, train: Dataset, calib: Dataset, bandwidth="auto",
            base="auto", rng: RngStream = None):
        rng = rng or RngStream(0)
        self.mu_, self.base_config_ = _resolve_base(base, train, rng)
        self.calib_X_ = calib.X.copy()
        self.scores_ = np.abs(calib.y - self.mu_.predict(calib.X))
        if bandwidth == "auto":
            self.h_ = self._auto_bandwidth()
        else:
            self.h_ = float(bandwidth)
            if self.h_ <= 0:
                raise ValueError("bandwidth must be positive")
        return self

    def _pairwise_d2(self):
        sq = np.sum(self.calib_X_ ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (self.calib_X_ @ self.calib_X_.T)
        return np.maximum(d2, 0.0)

    def _auto_bandwidth(self):
        d2 = self._pairwise_d2()
        n = d2.shape[0]
        med = float(np.median(d2[np.triu_indices(n, k=1)]))
        if med <= 0:
            med = 1.0
        target = 1.0 - self.alpha
        best_h, best_gap = None, math.inf
        for factor in (0.25, 0.5, 1.0, 2.0, 4.0):
            h = med * factor
            w = np.exp(-d2 / h)
            covered = 0
            for j in range(n):
                wj = np.delete(w[j], j)
                sj = np.delete(self.scores_, j)
                t = weighted_quantile(sj, wj, target)
                covered += self.scores_[j] <= t
            gap = abs(covered / n - target)
            if gap < best_gap:
                best_gap, best_h = gap, h
        return best_h

    def threshold(self, x) -> float:
        d2 = np.sum((self.calib_X_ - np.asarray(x, dtype=float)) ** 2, axis=1)
        w = np.exp(-d2 / self.h_)
        return weighted_quantile(self.scores_, w, 1.0 - self.alpha)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        m = self.mu_.predict(X)
        t = np.array([self.threshold(x) for x in X])
        return m - t, m + t


class RLCP(IntervalPredictor):
    """Randomized locally weighted split conformal.

    Weights use perturbed query locations, w = exp(-||x + xi - X_i||^2 /
    (2 h^2)) with xi ~ N(0, h^2 I); the interval half-width averages the
    weighted-quantile threshold over `m` noise draws. The bandwidth is the
    median of the pooled distances from each calibration point to its
    floor(sqrt(n_train)) nearest training points. Noise is drawn from
    per-query child streams of the stream captured at fit time, so repeated
    prediction over the same batch is reproducible.
    """

    method = "rlcp"

    def fit(self, train: Dataset, calib: Dataset, m: int = 10, base="auto",
            rng: RngStream = None, bandwidth=None):
        rng = rng or RngStream(0)
        if train.n < 2:
            raise ValueError("RLCP bandwidth needs at least 2 training rows")
        self.m_ = int(m)
        self.mu_, self.base_config_ = _resolve_base(base, train, rng)
        self.calib_X_ = calib.X.copy()
        self.scores_ = np.abs(calib.y - self.mu_.predict(calib.X))
        if bandwidth is None:
            self.h_ = self._knn_bandwidth(train.X)
        else:
            self.h_ = float(bandwidth)
        self.noise_rng_ = rng.child("query-noise")
        self.suppress_noise = False  # test hook: zero noise reduces to a fixed kernel
        return self

    def _knn_bandwidth(self, train_X):
        k = max(1, int(math.floor(math.sqrt(train_X.shape[0]))))
        pooled = []
        for x in self.calib_X_:
            d = np.sqrt(np.sum((train_X - x) ** 2, axis=1))
            pooled.append(np.sort(d)[:k])
        h = float(np.median(np.concatenate(pooled)))
        return h if h > 0 else 1.0

    def _threshold(self, x, stream: RngStream) -> float:
        g = stream.generator()
        total = 0.0
        for _ in range(self.m_):
            xi = g.normal(0.0, self.h_, size=x.shape[0])
            if self.suppress_noise:
                xi = np.zeros_like(xi)
            d2 = np.sum((self.calib_X_ - (x + xi)) ** 2, axis=1)
            w = np.exp(-d2 / (2.0 * self.h_ * self.h_))
            total += weighted_quantile(self.scores_, w, 1.0 - self.alpha)
        return total / self.m_

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        m = self.mu_.predict(X)
        t = np.array([self._threshold(x, self.noise_rng_.child(i))
                      for i, x in enumerate(X)])
        return m - t, m + t


class ResidualBootstrap(IntervalPredictor):
    """Residual bootstrap intervals: centered out-of-fold residuals, B model
    refits on resampled data, and empirical alpha/2, 1-alpha/2 quantiles of
    the simulated responses. Simulation noise at prediction time comes from
    per-query child streams, as in RLCP."""

    method = "bootstrap"
    conformal = False

    def fit(self, train: Dataset, B: int = 200, base="auto", K: int = 5,
            rng: RngStream = None):
        rng = rng or RngStream(0)
        if B < MIN_BOOTSTRAP_DRAWS:
            raise ValueError(f"B must be >= {MIN_BOOTSTRAP_DRAWS}, got {B}")
        if base == "auto" or base is None:
            base = select_learner(train, regressor_candidates(train.p),
                                  folds=5, rng=rng.child("base-cv"), task="regression")
        folds = kfold(train, K, rng.child("folds"))
        all_idx = np.arange(train.n)
        resid = np.empty(train.n)
        for k, test_idx in enumerate(folds):
            fit_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            model = fit_regressor(base, train.X[fit_idx], train.y[fit_idx],
                                  rng=rng.child(("oof", k)))
            resid[test_idx] = train.y[test_idx] - model.predict(train.X[test_idx])
        self.resid_ = resid - resid.mean()
        self.models_ = []
        for b in range(B):
            stream = rng.child(("boot", b))
            boot = stream.generator().integers(0, train.n, size=train.n)
            self.models_.append(fit_regressor(
                base, train.X[boot], train.y[boot], rng=stream.child("fit")))
        self.noise_rng_ = rng.child("sim-noise")
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        B = len(self.models_)
        preds = np.stack([m.predict(X) for m in self.models_])  # (B, n_q)
        lo, hi = self.alpha / 2.0, 1.0 - self.alpha / 2.0
        l = np.empty(X.shape[0])
        u = np.empty(X.shape[0])
        ones = np.ones(B)
        for i in range(X.shape[0]):
            g = self.noise_rng_.child(i).generator()
            draws = preds[:, i] + self.resid_[g.integers(0, self.resid_.shape[0], size=B)]
            l[i] = weighted_quantile(draws, ones, lo)
            u[i] = weighted_quantile(draws, ones, hi)
        return l, u


class QRFInterval(IntervalPredictor):
    """Quantile regression forest band [Q_{alpha/2}, Q_{1-alpha/2}] from the
    pooled leaf multiset; no conformal correction."""

    method = "qrf"
    conformal = False

    def fit(self, train: Dataset, trees: int = 200, max_depth=None,
            min_leaf: int = 5, max_features=None, rng: RngStream = None):
        rng = rng or RngStream(0)
        if max_features is None:
            max_features = max(1, train.p // 3)
        config = LearnerConfig.make("forest", trees=trees, max_depth=max_depth,
                                    min_leaf=min_leaf, max_features=max_features)
        self.forest_ = fit_regressor(config, train.X, train.y, rng=rng.child("forest"))
        return self

    def predict(self, X):
        return (self.forest_.quantile(X, self.alpha / 2.0),
                self.forest_.quantile(X, 1.0 - self.alpha / 2.0))


class OLSInterval(IntervalPredictor):
    """Classical least-squares prediction interval driven by the Student-t
    quantile: y_hat +- t_{n-p-1, 1-alpha/2} * sqrt(sigma^2 + SE_mean^2)."""

    method = "ols-interval"
    conformal = False

    def fit(self, train: Dataset, rng: RngStream = None):
        self.model_ = OLSRegressor().fit(train.X, train.y)
        dof = self.model_.dof_
        if dof < 1:
            raise ValueError("not enough degrees of freedom for a t interval")
        self.t_mult_ = student_t_quantile(1.0 - self.alpha / 2.0, dof)
        return self

    def predict(self, X):
        m = self.model_.predict(X)
        se_mean = self.model_.mean_se(X)
        half = self.t_mult_ * np.sqrt(self.model_.resid_se_ ** 2 + se_mean ** 2)
        return m - half, m + half


def fit_cp_residual(train, calib, alpha, base="auto", rng=None) -> CPResidual:
    return CPResidual(alpha).fit(train, calib, base=base, rng=rng)


def fit_cp_studentized(train, calib, alpha, base="auto",
                       dispersion_base=None, rng=None) -> CPStudentized:
    return CPStudentized(alpha).fit(train, calib, base=base,
                                    dispersion_base=dispersion_base, rng=rng)


def fit_cqr(train, calib, alpha, quantile_learner=None, rng=None) -> CQR:
    return CQR(alpha).fit(train, calib, quantile_learner=quantile_learner, rng=rng)


def fit_cv_plus(train, alpha, K=5, base="auto", rng=None) -> CVPlus:
    return CVPlus(alpha).fit(train, K=K, base=base, rng=rng)


def fit_lcp(train, calib, alpha, bandwidth="auto", base="auto", rng=None) -> LCP:
    return LCP(alpha).fit(train, calib, bandwidth=bandwidth, base=base, rng=rng)


def fit_rlcp(train, calib, alpha, m=10, base="auto", rng=None, bandwidth=None) -> RLCP:
    return RLCP(alpha).fit(train, calib, m=m, base=base, rng=rng, bandwidth=bandwidth)


def fit_bootstrap(train, alpha, B=200, base="auto", K=5, rng=None) -> ResidualBootstrap:
    return ResidualBootstrap(alpha).fit(train, B=B, base=base, K=K, rng=rng)


def fit_qrf(train, alpha, trees=200, max_depth=None, min_leaf=5,
            max_features=None, rng=None) -> QRFInterval:
    return QRFInterval(alpha).fit(train, trees=trees, max_depth=max_depth,
                                  min_leaf=min_leaf, max_features=max_features, rng=rng)


def fit_ols_interval(train, alpha) -> OLSInterval:
    return OLSInterval(alpha).fit(train)


METHOD_NAMES = ("cp-residual", "cp-studentized", "cqr", "cv-plus", "lcp",
                "rlcp", "bootstrap", "qrf", "ols-interval", "trivial")

_SPLIT_CALIBRATED = {"cp-residual", "cp-studentized", "cqr", "lcp", "rlcp"}


class TrivialInterval(IntervalPredictor):
    """Whole-line intervals; a diagnostics-only baseline that covers everything."""

    method = "trivial"
    conformal = False

    def fit(self, train: Dataset, rng: RngStream = None):
        return self

    def predict(self, X):
        n = np.asarray(X).shape[0]
        return np.full(n, -math.inf), np.full(n, math.inf)


def fit_method(config: MethodConfig, train: Dataset, alpha: float,
               rng: RngStream) -> IntervalPredictor:
    """Fit a named method on a training set, splitting off an internal 50/50
    calibration half for the split-conformal family."""
    name = config.name
    if name not in METHOD_NAMES:
        raise ValueError(f"unknown interval method {name!r}")
    if name in _SPLIT_CALIBRATED:
        plan = split(train, 0.5, rng.child("pred-calib"))
        pred_set = train.subset(plan.train_indices)
        calib_set = train.subset(plan.eval_indices)
    if name == "cp-residual":
        return fit_cp_residual(pred_set, calib_set, alpha,
                               base=config.opt("base", "auto"), rng=rng.child("fit"))
    if name == "cp-studentized":
        return fit_cp_studentized(pred_set, calib_set, alpha,
                                  base=config.opt("base", "auto"),
                                  dispersion_base=config.opt("dispersion_base"),
                                  rng=rng.child("fit"))
    if name == "cqr":
        return fit_cqr(pred_set, calib_set, alpha,
                       quantile_learner=config.opt("quantile_learner"),
                       rng=rng.child("fit"))
    if name == "lcp":
        return fit_lcp(pred_set, calib_set, alpha,
                       bandwidth=config.opt("bandwidth", "auto"),
                       base=config.opt("base", "auto"), rng=rng.child("fit"))
    if name == "rlcp":
        return fit_rlcp(pred_set, calib_set, alpha, m=config.opt("m", 10),
                        base=config.opt("base", "auto"),
                        bandwidth=config.opt("bandwidth"), rng=rng.child("fit"))
    if name == "cv-plus":
        return fit_cv_plus(train, alpha, K=config.opt("K", 5),
                           base=config.opt("base", "auto"), rng=rng.child("fit"))
    if name == "bootstrap":
        return fit_bootstrap(train, alpha, B=config.opt("B", 200),
                             base=config.opt("base", "auto"),
                             K=config.opt("K", 5), rng=rng.child("fit"))
    if name == "qrf":
        return fit_qrf(train, alpha, trees=config.opt("trees", 200),
                       max_depth=config.opt("max_depth"),
                       min_leaf=config.opt("min_leaf", 5),
                       max_features=config.opt("max_features"), rng=rng.child("fit"))
    if name == "ols-interval":
        return fit_ols_interval(train, alpha)
    return TrivialInterval(alpha).fit(train)
