"""Order-statistic and weighted quantile primitives.

One convention is used package-wide: the tau-quantile of a weighted sample is
the smallest value v whose cumulative normalized weight reaches tau. With
uniform weights this reduces to the ceil(tau * n)-th order statistic.
"""

from __future__ import annotations

import math

import numpy as np


def conformal_quantile(scores, alpha: float) -> float:
    """Finite-sample calibration threshold.

    Returns the k-th smallest score with k = ceil((n + 1) * (1 - alpha));
    +inf when k exceeds n (the calibration set is too small for the level).
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if n == 0:
        raise ValueError("scores must be non-empty")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    k = math.ceil((n + 1) * (1.0 - alpha))
    if k > n:
        return math.inf
    return float(np.sort(scores)[k - 1])


def weighted_quantile(values, weights, tau: float) -> float:
    """Smallest v with sum(weights[values <= v]) / sum(weights) >= tau.

    The sample is canonicalized by sorting on (value, weight) so that the
    result is a pure function of the weighted multiset, independent of input
    order; cumulative weight is only compared at the last occurrence of each
    distinct value.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be equal-length vectors")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("weights must have positive total mass")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    order = np.lexsort((weights, values))
    v = values[order]
    cum = np.cumsum(weights[order])
    target = tau * total
    # evaluate only where the next value differs (ties accumulate first)
    boundary = np.ones(v.shape[0], dtype=bool)
    boundary[:-1] = v[1:] > v[:-1]
    idx = np.flatnonzero(boundary & (cum >= target))
    if idx.size == 0:
        return float(v[-1])
    return float(v[idx[0]])
