"""Compiled CART kernels shared by the forest and boosting learners.

Trees are grown by exact greedy search: at each node every candidate feature
is sorted and every midpoint between consecutive distinct values is scored by
weighted squared-error reduction. Ties in the split objective keep the first
candidate encountered, and features are scanned in ascending index with
ascending thresholds, so ties resolve to the lexicographically smallest
(feature, threshold) pair. Feature subsampling uses an explicit splitmix64
stream seeded per tree, keeping growth deterministic and platform-independent.

Nodes are stored in flat arrays; `feature[node] == -1` marks a leaf. A row
goes left iff `x[feature] <= threshold`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NO_DEPTH_LIMIT = -1


@njit(cache=True, inline="always")
def _splitmix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _sample_features(p, mtry, state, out):
    """Partial Fisher-Yates draw of `mtry` distinct features, returned sorted."""
    pool = np.empty(p, dtype=np.int64)
    for j in range(p):
        pool[j] = j
    for i in range(mtry):
        state, z = _splitmix64(state)
        j = i + int(z % np.uint64(p - i))
        pool[i], pool[j] = pool[j], pool[i]
    chosen = np.sort(pool[:mtry])
    for i in range(mtry):
        out[i] = chosen[i]
    return state


@njit(cache=True)
def _grow_tree(X, y, w, max_depth, min_leaf, mtry, seed,
               feature, threshold, left, right, value, row_leaf):
    """Grow one tree in place over preallocated node arrays.

    Returns the number of nodes used. `row_leaf[i]` receives the leaf node id
    of training row i.
    """
    n, p = X.shape
    idx = np.arange(n)
    state = np.uint64(seed)
    feat_buf = np.empty(mtry, dtype=np.int64)

    # stack entries: (node_id, start, end, depth)
    stack = np.empty((2 * n + 2, 4), dtype=np.int64)
    n_nodes = 1
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        sw = 0.0
        swy = 0.0
        swy2 = 0.0
        for i in range(start, end):
            r = idx[i]
            sw += w[r]
            swy += w[r] * y[r]
            swy2 += w[r] * y[r] * y[r]
        node_value = swy / sw
        parent_sse = swy2 - swy * swy / sw

        splittable = m >= 2 * min_leaf and parent_sse > 0.0
        if max_depth != NO_DEPTH_LIMIT and depth >= max_depth:
            splittable = False

        best_sse = np.inf
        best_feat = -1
        best_thr = 0.0

        if splittable:
            if mtry >= p:
                for j in range(p):
                    feat_buf[j] = j
                state_now = state
            else:
                state_now = _sample_features(p, mtry, state, feat_buf)
            state = state_now

            vals = np.empty(m)
            for fi in range(mtry):
                f = feat_buf[fi]
                for i in range(m):
                    vals[i] = X[idx[start + i], f]
                order = np.argsort(vals)
                cw = 0.0
                cwy = 0.0
                cwy2 = 0.0
                for i in range(m - 1):
                    r = idx[start + order[i]]
                    cw += w[r]
                    cwy += w[r] * y[r]
                    cwy2 += w[r] * y[r] * y[r]
                    v_here = vals[order[i]]
                    v_next = vals[order[i + 1]]
                    if v_next <= v_here:
                        continue
                    n_left = i + 1
                    if n_left < min_leaf or m - n_left < min_leaf:
                        continue
                    rw = sw - cw
                    sse = (cwy2 - cwy * cwy / cw) + ((swy2 - cwy2) - (swy - cwy) * (swy - cwy) / rw)
                    if sse < best_sse and sse < parent_sse:
                        best_sse = sse
                        best_feat = f
                        best_thr = 0.5 * (v_here + v_next)

        if best_feat < 0:
            feature[node] = -1
            value[node] = node_value
            for i in range(start, end):
                row_leaf[idx[i]] = node
            continue

        # stable two-way partition of idx[start:end]
        tmp = np.empty(m, dtype=np.int64)
        n_left = 0
        for i in range(start, end):
            if X[idx[i], best_feat] <= best_thr:
                tmp[n_left] = idx[i]
                n_left += 1
        n_right = n_left
        for i in range(start, end):
            if X[idx[i], best_feat] > best_thr:
                tmp[n_right] = idx[i]
                n_right += 1
        for i in range(m):
            idx[start + i] = tmp[i]

        feature[node] = best_feat
        threshold[node] = best_thr
        value[node] = node_value
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2

        stack[top, 0] = left[node]
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = right[node]
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1

    return n_nodes


@njit(cache=True)
def _apply_tree(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


class RegressionTree:
    """A single fitted CART regression tree (weighted squared error)."""

    def __init__(self, max_depth=NO_DEPTH_LIMIT, min_leaf=1, max_features=None, seed=0):
        self.max_depth = NO_DEPTH_LIMIT if max_depth is None else int(max_depth)
        self.min_leaf = int(min_leaf)
        self.max_features = max_features
        self.seed = int(seed) & 0x7FFFFFFFFFFFFFFF  # keep within int64 for the kernel
        self.n_nodes = 0

    def fit(self, X, y, sample_weight=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, p = X.shape
        if sample_weight is None:
            sample_weight = np.ones(n)
        w = np.ascontiguousarray(sample_weight, dtype=np.float64)
        mtry = p if self.max_features is None else min(int(self.max_features), p)
        mtry = max(1, mtry)
        cap = 2 * n + 1
        self.feature = np.full(cap, -1, dtype=np.int64)
        self.threshold = np.zeros(cap)
        self.left = np.zeros(cap, dtype=np.int64)
        self.right = np.zeros(cap, dtype=np.int64)
        self.value = np.zeros(cap)
        self.row_leaf = np.zeros(n, dtype=np.int64)
        self.n_nodes = _grow_tree(
            X, y, w, self.max_depth, self.min_leaf, mtry, self.seed,
            self.feature, self.threshold, self.left, self.right, self.value, self.row_leaf,
        )
        for name in ("feature", "threshold", "left", "right", "value"):
            setattr(self, name, getattr(self, name)[: self.n_nodes].copy())
        return self

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]
