"""k-nearest-neighbour regression with deterministic tie breaking."""

from __future__ import annotations

import numpy as np

from ..data import Dataset


class KNNRegressor:
    """Mean response of the k nearest training rows under Euclidean distance.

    Distance ties resolve in favour of the lower training row index (stable
    sort on distances).
    """

    family = "knn"

    def __init__(self, k: int):
        self.k = int(k)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if not 1 <= self.k <= X.shape[0]:
            raise ValueError(f"k must satisfy 1 <= k <= n, got k={self.k}, n={X.shape[0]}")
        self.X_ = X.copy()
        self.y_ = y.copy()
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            d2 = np.sum((self.X_ - x) ** 2, axis=1)
            nearest = np.argsort(d2, kind="stable")[: self.k]
            out[i] = self.y_[nearest].mean()
        return out


def fit_knn(train: Dataset, k: int) -> KNNRegressor:
    return KNNRegressor(k).fit(train.X, train.y)
