"""Linear least squares and penalized logistic regression."""

from __future__ import annotations

import numpy as np

from ..data import Dataset

PROB_CLAMP = 1e-6


class SingularDesignError(np.linalg.LinAlgError):
    """Design matrix is rank-deficient and the ridge fallback is disabled."""


def _design(X):
    return np.column_stack([np.ones(X.shape[0]), X])


class OLSRegressor:
    """Least-squares fit with intercept, plus the pieces of the classical
    prediction interval: residual standard error, degrees of freedom, and
    (X'X)^-1 for the mean standard error at a new point.

    A rank-deficient design falls back to ridge with penalty 1e-8 and sets
    `ridge_fallback` (disable with allow_fallback=False to get a hard error).
    """

    family = "ols"

    def __init__(self, allow_fallback=True):
        self.allow_fallback = allow_fallback
        self.ridge_fallback = False

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        Z = _design(X)
        n, q = Z.shape
        gram = Z.T @ Z
        rank = np.linalg.matrix_rank(gram)
        if rank < q:
            if not self.allow_fallback:
                raise SingularDesignError(f"design matrix has rank {rank} < {q}")
            self.ridge_fallback = True
            gram = gram + 1e-8 * np.eye(q)
        self.xtx_inv_ = np.linalg.inv(gram)
        self.coef_ = self.xtx_inv_ @ (Z.T @ y)
        resid = y - Z @ self.coef_
        self.dof_ = n - q
        rss = float(resid @ resid)
        self.resid_se_ = np.sqrt(rss / self.dof_) if self.dof_ > 0 else 0.0
        return self

    def predict(self, X) -> np.ndarray:
        return _design(np.asarray(X, dtype=float)) @ self.coef_

    def mean_se(self, X) -> np.ndarray:
        """Standard error of the fitted mean at each row of X."""
        Z = _design(np.asarray(X, dtype=float))
        var = np.einsum("ij,jk,ik->i", Z, self.xtx_inv_, Z)
        return self.resid_se_ * np.sqrt(np.maximum(var, 0.0))


def fit_ols(train: Dataset, allow_fallback: bool = True) -> OLSRegressor:
    if train.n <= train.p + 1:
        raise ValueError(f"OLS needs n > p + 1, got n={train.n}, p={train.p}")
    return OLSRegressor(allow_fallback=allow_fallback).fit(train.X, train.y)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def clamp_proba(p):
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


class LogisticClassifier:
    """L2-penalized logistic regression fit by damped Newton iterations.

    The intercept is not penalized. Optimization stops when the penalized
    log-likelihood gradient drops below 1e-8 in infinity norm, or after 500
    iterations (relevant for separable data with l2=0). A single-class target
    yields a constant-probability model with `degenerate` set.
    """

    family = "logistic"

    def __init__(self, l2: float = 0.0, tol: float = 1e-8, max_iter: int = 500):
        if l2 < 0:
            raise ValueError("l2 penalty must be >= 0")
        self.l2 = float(l2)
        self.tol = tol
        self.max_iter = max_iter
        self.degenerate = False

    def _penalty_mask(self, q):
        mask = np.ones(q)
        mask[0] = 0.0  # intercept unpenalized
        return mask

    def fit(self, X, labels, sample_weight=None):
        X = np.asarray(X, dtype=float)
        yb = np.asarray(labels, dtype=float)
        n = X.shape[0]
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        if len(np.unique(yb)) < 2:
            self.degenerate = True
            self.const_ = float(np.clip(yb.mean(), PROB_CLAMP, 1 - PROB_CLAMP))
            self.coef_ = None
            return self
        Z = _design(X)
        q = Z.shape[1]
        pen = self.l2 * self._penalty_mask(q)
        beta = np.zeros(q)
        ll = self._penalized_ll(Z, yb, w, beta, pen)
        for _ in range(self.max_iter):
            p = _sigmoid(Z @ beta)
            grad = Z.T @ (w * (yb - p)) - pen * beta
            if np.max(np.abs(grad)) < self.tol:
                break
            s = np.maximum(w * p * (1.0 - p), 1e-12)
            H = (Z * s[:, None]).T @ Z + np.diag(pen + 1e-10)
            step = np.linalg.solve(H, grad)
            t = 1.0
            for _ in range(30):
                cand = beta + t * step
                cand_ll = self._penalized_ll(Z, yb, w, cand, pen)
                if cand_ll >= ll:
                    beta, ll = cand, cand_ll
                    break
                t *= 0.5
            else:
                break
        self.coef_ = beta
        return self

    @staticmethod
    def _penalized_ll(Z, yb, w, beta, pen):
        z = Z @ beta
        # log-likelihood written via log1p(exp(-|z|)) for stability
        ll = np.sum(w * (yb * z - (np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))))))
        return ll - 0.5 * np.sum(pen * beta * beta)

    def penalized_grad(self, X, labels, beta=None, sample_weight=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Z = _design(X)
        yb = np.asarray(labels, dtype=float)
        w = np.ones(len(yb)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        beta = self.coef_ if beta is None else np.asarray(beta, dtype=float)
        pen = self.l2 * self._penalty_mask(Z.shape[1])
        return Z.T @ (w * (yb - _sigmoid(Z @ beta))) - pen * beta

    def penalized_ll(self, X, labels, beta=None, sample_weight=None) -> float:
        X = np.asarray(X, dtype=float)
        Z = _design(X)
        yb = np.asarray(labels, dtype=float)
        w = np.ones(len(yb)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        beta = self.coef_ if beta is None else np.asarray(beta, dtype=float)
        return float(self._penalized_ll(Z, yb, w, beta, self.l2 * self._penalty_mask(Z.shape[1])))

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.degenerate:
            return np.full(X.shape[0], self.const_)
        return _sigmoid(_design(X) @ self.coef_)


def fit_logistic(X, labels, l2: float = 0.0, sample_weight=None) -> LogisticClassifier:
    return LogisticClassifier(l2=l2).fit(X, labels, sample_weight=sample_weight)
