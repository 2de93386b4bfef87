"""Post-hoc probability calibrators: isotonic (PAVA), Platt, histogram binning."""

from __future__ import annotations

import numpy as np

from .linear import LogisticClassifier, _sigmoid


def pava(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: weighted least-squares fit that is
    non-decreasing in the given order. Returns the fitted vector."""
    y = np.asarray(values, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    n = y.shape[0]
    # blocks as (level, weight, count) merged right-to-left on violation
    levels = np.empty(n)
    wts = np.empty(n)
    counts = np.empty(n, dtype=int)
    m = 0
    for i in range(n):
        levels[m] = y[i]
        wts[m] = w[i]
        counts[m] = 1
        m += 1
        while m > 1 and levels[m - 2] > levels[m - 1]:
            tot = wts[m - 2] + wts[m - 1]
            levels[m - 2] = (levels[m - 2] * wts[m - 2] + levels[m - 1] * wts[m - 1]) / tot
            wts[m - 2] = tot
            counts[m - 2] += counts[m - 1]
            m -= 1
    return np.repeat(levels[:m], counts[:m])


class IsotonicCalibrator:
    """Non-decreasing step map fitted by PAVA on (score, label) pairs.

    Scores with equal value are pooled before the monotone fit. Evaluation is
    a left-continuous step function over the knots; beyond either end the map
    clamps to the endpoint value.
    """

    method = "isotonic"

    def fit(self, scores, labels):
        s = np.asarray(scores, dtype=float)
        t = np.asarray(labels, dtype=float)
        if s.shape[0] == 0:
            raise ValueError("need at least one calibration point")
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        knots, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
        sums = np.bincount(inverse, weights=t)
        self.knots_ = knots
        self.values_ = pava(sums / counts, counts.astype(float))
        return self

    def transform(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=float)
        idx = np.searchsorted(self.knots_, s, side="left")
        return self.values_[np.minimum(idx, self.values_.shape[0] - 1)]


class PlattCalibrator:
    """One-dimensional logistic map sigmoid(a * s + b) fitted to the labels."""

    method = "platt"

    def fit(self, scores, labels):
        s = np.asarray(scores, dtype=float).reshape(-1, 1)
        t = np.asarray(labels, dtype=float)
        clf = LogisticClassifier(l2=0.0).fit(s, t)
        if clf.degenerate:
            self.a_, self.b_ = 0.0, None
            self.const_ = clf.const_
        else:
            self.b_, self.a_ = float(clf.coef_[0]), float(clf.coef_[1])
            self.const_ = None
        return self

    def transform(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=float)
        if self.const_ is not None:
            return np.full(s.shape[0], self.const_)
        return _sigmoid(self.a_ * s + self.b_)


class BinningCalibrator:
    """Equal-frequency histogram binning: the map is the per-bin label mean.

    Bin edges are score values at index cuts of the sorted sample; a bin left
    empty (possible only when B > n) inherits the value of the nearest
    non-empty bin, preferring the left neighbour on ties.
    """

    method = "binning"

    def __init__(self, n_bins: int = 10):
        if n_bins < 1:
            raise ValueError("need at least one bin")
        self.n_bins = int(n_bins)
        self.had_empty_bins = False

    def fit(self, scores, labels):
        s = np.asarray(scores, dtype=float)
        t = np.asarray(labels, dtype=float)
        n = s.shape[0]
        if n == 0:
            raise ValueError("need at least one calibration point")
        order = np.argsort(s, kind="stable")
        s_sorted, t_sorted = s[order], t[order]
        cuts = [int(np.floor(k * n / self.n_bins)) for k in range(self.n_bins + 1)]
        values = np.full(self.n_bins, np.nan)
        for b in range(self.n_bins):
            lo, hi = cuts[b], cuts[b + 1]
            if hi > lo:
                values[b] = t_sorted[lo:hi].mean()
        empty = np.isnan(values)
        if empty.any():
            self.had_empty_bins = True
            filled = np.flatnonzero(~empty)
            for b in np.flatnonzero(empty):
                values[b] = values[filled[np.argmin(np.abs(filled - b))]]
        # internal edges: first score of each bin after the first
        self.edges_ = np.array([s_sorted[c] for c in cuts[1:-1]])
        self.values_ = values
        return self

    def transform(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=float)
        idx = np.searchsorted(self.edges_, s, side="right")
        return self.values_[idx]


class IdentityCalibrator:
    """No-op map for uncalibrated estimators."""

    method = "none"

    def fit(self, scores, labels):
        return self

    def transform(self, scores) -> np.ndarray:
        return np.asarray(scores, dtype=float)


def fit_isotonic(scores, labels) -> IsotonicCalibrator:
    return IsotonicCalibrator().fit(scores, labels)


def fit_platt(scores, labels) -> PlattCalibrator:
    return PlattCalibrator().fit(scores, labels)


def fit_binning(scores, labels, n_bins: int = 10) -> BinningCalibrator:
    return BinningCalibrator(n_bins=n_bins).fit(scores, labels)


def make_calibrator(method: str, n_bins: int = 10):
    if method == "isotonic":
        return IsotonicCalibrator()
    if method == "platt":
        return PlattCalibrator()
    if method == "binning":
        return BinningCalibrator(n_bins=n_bins)
    if method == "none":
        return IdentityCalibrator()
    raise ValueError(f"unknown calibration method {method!r}")
