"""Scalar and curve diagnostics for conditional-coverage assessment.

Everything here is a pure function of its inputs: the validity-index family
and its undercoverage/overcoverage decomposition, the coverage-profile
quantile curve, calibration diagrams with ECE, worst-slab coverage, and the
rank-agreement scores used to compare estimated and reference method
rankings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .rng import RngStream


@dataclass(frozen=True)
class CviReport:
    """Validity-index family at level alpha with rate tolerance gamma.

    `cvi` always splits exactly into `cvi_u + cvi_o`. The rates pi_minus and
    pi_plus count points beyond the (1 -+ gamma)(1 - alpha) thresholds; cmu
    and cmo average the shortfall/excess over exactly those points and are 0
    when no point qualifies.
    """

    cvi: float
    cvi_u: float
    cvi_o: float
    pi_minus: float
    pi_plus: float
    cmu: float
    cmo: float
    alpha: float
    gamma: float
    n_eval: int

    def to_dict(self) -> dict:
        return {
            "cvi": self.cvi, "cvi_u": self.cvi_u, "cvi_o": self.cvi_o,
            "pi_minus": self.pi_minus, "pi_plus": self.pi_plus,
            "cmu": self.cmu, "cmo": self.cmo,
            "alpha": self.alpha, "gamma": self.gamma, "n_eval": self.n_eval,
        }


def cvi_report(etas, alpha: float, gamma: float = 0.02) -> CviReport:
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0:
        raise ValueError("etas must be non-empty")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    target = 1.0 - alpha
    shortfall = np.maximum(0.0, target - etas)
    excess = np.maximum(0.0, etas - target)
    under = etas < (1.0 - gamma) * target
    over = etas > (1.0 + gamma) * target
    n_under = int(under.sum())
    n_over = int(over.sum())
    return CviReport(
        cvi=float(np.mean(np.abs(etas - target))),
        cvi_u=float(shortfall.mean()),
        cvi_o=float(excess.mean()),
        pi_minus=n_under / etas.size,
        pi_plus=n_over / etas.size,
        cmu=float(shortfall[under].sum() / n_under) if n_under else 0.0,
        cmo=float(excess[over].sum() / n_over) if n_over else 0.0,
        alpha=alpha, gamma=gamma, n_eval=etas.size,
    )


@dataclass(frozen=True)
class CvpCurve:
    """Empirical quantile function of the reliability values.

    `quantiles[i]` is the sorted value at cumulative proportion `props[i]`,
    on the grid {1/n, ..., 1}. The signed areas against the target line
    reproduce the validity-index split: `area_below_target` equals the
    gamma=0 undercoverage term and `area_above_target` the overcoverage term.
    """

    props: np.ndarray
    quantiles: np.ndarray
    target: float

    @property
    def area_below_target(self) -> float:
        return float(np.maximum(0.0, self.target - self.quantiles).mean())

    @property
    def area_above_target(self) -> float:
        return float(np.maximum(0.0, self.quantiles - self.target).mean())

    def crossing_proportion(self) -> float:
        """First grid proportion at which the curve reaches the target."""
        above = np.flatnonzero(self.quantiles >= self.target)
        if above.size == 0:
            return 1.0
        return float(self.props[above[0]])


def cvp_curve(etas, alpha: float) -> CvpCurve:
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0:
        raise ValueError("etas must be non-empty")
    n = etas.size
    return CvpCurve(props=np.arange(1, n + 1) / n,
                    quantiles=np.sort(etas),
                    target=1.0 - alpha)


def marginal_stats(pred, test) -> tuple[float, float]:
    """Empirical coverage and mean interval length on a labelled test set.

    Any infinite-width interval makes the average length +inf.
    """
    l, u = pred.predict(test.X)
    covered = (l <= test.y) & (test.y <= u)
    lengths = u - l
    avg_len = math.inf if np.any(np.isinf(lengths)) else float(lengths.mean())
    return float(covered.mean()), avg_len


@dataclass(frozen=True)
class DiagramBins:
    """Equal-frequency calibration diagram plus its expected calibration error."""

    counts: np.ndarray
    mean_confidence: np.ndarray
    empirical_accuracy: np.ndarray
    ece: float

    def to_rows(self) -> list[dict]:
        return [
            {"bin": int(b), "count": int(self.counts[b]),
             "mean_confidence": float(self.mean_confidence[b]),
             "empirical_accuracy": float(self.empirical_accuracy[b])}
            for b in range(self.counts.shape[0])
        ]


def reliability_diagram(etas, labels, n_bins: int = 10) -> DiagramBins:
    """Bin predictions into `n_bins` equal-frequency bins (index cuts of the
    stable sort) and compare mean confidence to empirical frequency."""
    etas = np.asarray(etas, dtype=float)
    labels = np.asarray(labels, dtype=float)
    n = etas.size
    if n_bins < 1:
        raise ValueError("need at least one bin")
    if n < n_bins:
        raise ValueError(f"need n >= n_bins, got n={n}, n_bins={n_bins}")
    order = np.argsort(etas, kind="stable")
    counts = np.empty(n_bins, dtype=int)
    conf = np.empty(n_bins)
    acc = np.empty(n_bins)
    for b in range(n_bins):
        lo = (b * n) // n_bins
        hi = ((b + 1) * n) // n_bins
        sel = order[lo:hi]
        counts[b] = hi - lo
        conf[b] = etas[sel].mean()
        acc[b] = labels[sel].mean()
    ece = float(np.sum((counts / n) * np.abs(acc - conf)))
    return DiagramBins(counts, conf, acc, ece)


@njit(cache=True)
def _min_window_coverage(prefix, m):
    """Minimum mean over all windows of length >= m; prefix has length n+1."""
    n = prefix.shape[0] - 1
    best = 2.0
    best_i = 0
    best_j = n
    for i in range(n - m + 1):
        for j in range(i + m, n + 1):
            cov = (prefix[j] - prefix[i]) / (j - i)
            if cov < best:
                best = cov
                best_i = i
                best_j = j
    return best, best_i, best_j


@dataclass(frozen=True)
class WscResult:
    value: float
    direction: np.ndarray
    slab: tuple
    variant: str
    flags: tuple = field(default_factory=tuple)


def _scan_directions(X, covered, delta, directions):
    n = X.shape[0]
    m = math.ceil(delta * n)
    best = (2.0, None, None)
    for v in directions:
        z = X @ v
        order = np.argsort(z, kind="stable")
        prefix = np.concatenate(([0.0], np.cumsum(covered[order])))
        value, i, j = _min_window_coverage(prefix, m)
        if value < best[0]:
            zs = z[order]
            best = (value, v, (float(zs[i]), float(zs[j - 1])))
    return best


def wsc(X, covered, delta: float = 0.1, n_directions: int = 100,
        rng: RngStream = None, variant: str = "in_sample") -> WscResult:
    """Worst-slab coverage: the minimum empirical coverage over directional
    slabs holding at least a `delta` fraction of the points.

    Directions are uniform on the sphere (normalized Gaussian draws); for
    each one, every contiguous window of the sorted projections with enough
    mass is scanned. The split variant picks the adversarial slab on a random
    half of the data and evaluates its coverage on the other half (an empty
    evaluation slab yields 1.0 with a flag).
    """
    X = np.asarray(X, dtype=float)
    covered = np.asarray(covered, dtype=float)
    n = X.shape[0]
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    if n < 2:
        raise ValueError("need at least 2 points")
    if math.ceil(delta * n) < 1:
        raise ValueError("delta * n must be at least 1")
    if variant not in ("in_sample", "split"):
        raise ValueError(f"unknown WSC variant {variant!r}")
    rng = rng or RngStream(0)
    g = rng.child("directions").generator()
    raw = g.normal(size=(n_directions, X.shape[1]))
    directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)

    if variant == "in_sample":
        value, v, slab = _scan_directions(X, covered, delta, directions)
        return WscResult(float(value), v, slab, variant)

    half = rng.child("halves").generator().permutation(n)
    n_sel = n // 2
    sel, evl = half[:n_sel], half[n_sel:]
    _, v, slab = _scan_directions(X[sel], covered[sel], delta, directions)
    z = X[evl] @ v
    inside = (z >= slab[0]) & (z <= slab[1])
    if not inside.any():
        return WscResult(1.0, v, slab, variant, flags=("empty-evaluation-slab",))
    return WscResult(float(covered[evl][inside].mean()), v, slab, variant)


def ranking_from_scores(scores) -> np.ndarray:
    """Rank positions (0-based) by ascending score; ties keep index order."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=int)
    ranks[order] = np.arange(scores.size)
    return ranks


def weighted_kendall_tau(d_true, rank_est) -> float:
    """Pairwise rank agreement weighted by the true score gap |d_i - d_j|.

    All-equal true scores leave no weighable pair and return 0.
    """
    d = np.asarray(d_true, dtype=float)
    est = np.asarray(rank_est, dtype=int)
    if d.shape != est.shape or d.size < 2:
        raise ValueError("need matching vectors of at least 2 items")
    true = ranking_from_scores(d)
    num = 0.0
    den = 0.0
    for i in range(d.size):
        for j in range(i + 1, d.size):
            w = abs(d[i] - d[j])
            if w == 0.0:
                continue
            k = np.sign(true[i] - true[j]) * np.sign(est[i] - est[j])
            num += w * k
            den += w
    if den == 0.0:
        return 0.0
    return float(num / den)


def ndcg_at_k(d_true, rank_est, k: int) -> float:
    """Discounted gain of the estimated top-k against the ideal ordering,
    with linear relevance rel(i) = max(d) - d_i. All-equal scores give 1."""
    d = np.asarray(d_true, dtype=float)
    est = np.asarray(rank_est, dtype=int)
    k = min(int(k), d.size)
    rel = d.max() - d
    by_est = np.argsort(est, kind="stable")
    by_true = np.argsort(d, kind="stable")
    discounts = 1.0 / np.log2(np.arange(1, k + 1) + 1)
    dcg = float(np.sum(rel[by_est[:k]] * discounts))
    idcg = float(np.sum(rel[by_true[:k]] * discounts))
    if idcg == 0.0:
        return 1.0
    return dcg / idcg


def hit_at_k(rank_true, rank_est, k: int) -> float:
    """Overlap fraction of the two top-k sets."""
    rt = np.asarray(rank_true, dtype=int)
    re = np.asarray(rank_est, dtype=int)
    k = min(int(k), rt.size)
    top_true = set(np.flatnonzero(rt < k).tolist())
    top_est = set(np.flatnonzero(re < k).tolist())
    return len(top_true & top_est) / k
