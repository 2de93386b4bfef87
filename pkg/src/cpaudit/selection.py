"""Repeated-split selection of the interval method with the best conditional
validity, plus per-input trust scores from the retained reliability members."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .conformal import IntervalPredictor, MethodConfig, fit_method
from .data import Dataset, split
from .metrics import cvi_report
from .reliability import EstimatorConfig, fit_member, generate_labels
from .rng import RngStream

DEFAULT_TRUST_MARGIN = 0.05


@dataclass
class SelectionResult:
    """Scores and refit artifacts of one selection run.

    `scores[k, m]` is candidate m's validity index on split k (+inf marks a
    failed fit); `mean_cvi` are the column means; `selected` the argmin with
    ties broken by candidate order. `ensembles[m]` holds the per-split
    reliability members of candidate m (the winner's power the trust score).
    """

    candidates: list
    scores: np.ndarray
    mean_cvi: np.ndarray
    selected: int
    ensembles: list
    final_predictor: IntervalPredictor
    alpha: float
    trust_margin: float = DEFAULT_TRUST_MARGIN
    flags: list = field(default_factory=list)
    etas: list = None  # per candidate: list of per-split reliability vectors
    dataset: Dataset = None         # retained so the refit recipe can be saved
    refit_stream: RngStream = None

    @property
    def winner(self) -> MethodConfig:
        return self.candidates[self.selected]


def cc_select(d: Dataset, alpha: float, candidates: list[MethodConfig],
              K: int = 5, rho: float = 0.5, est: EstimatorConfig = None,
              rng: RngStream = None, trust_margin: float = DEFAULT_TRUST_MARGIN,
              jobs: int = 1) -> SelectionResult:
    """Score every candidate on K shared splits and keep the CVI minimizer.

    Each split is partitioned once and reused by all candidates. Per cell:
    the candidate is fitted on the train side, a single-split reliability
    member is trained on the eval side's coverage labels, and the cell score
    is the mean absolute deviation of that member's estimates from 1 - alpha
    over the eval side. The winner is refitted on the full dataset; its K
    members are retained for trust scoring.
    """
    if not candidates:
        raise ValueError("need at least one candidate method")
    if K < 1:
        raise ValueError("K must be >= 1")
    est = est or EstimatorConfig()
    rng = rng or RngStream(0)
    M = len(candidates)
    scores = np.full((K, M), math.inf)
    ensembles = [[] for _ in range(M)]
    etas_store = [[] for _ in range(M)]
    flags = []

    plans = [split(d, rho, rng.child(("cc-split", k))) for k in range(K)]

    def run_cell(k: int, m: int):
        plan = plans[k]
        train = d.subset(plan.train_indices)
        evl = d.subset(plan.eval_indices)
        stream = rng.child(("cc-cell", k, m))
        predictor = fit_method(candidates[m], train, alpha, stream.child("cp"))
        labels = generate_labels(predictor, evl, split_id=k)
        member = fit_member(labels, est, stream.child("member"))
        etas = member.predict(evl.X)
        return cvi_report(etas, alpha).cvi, member, etas

    cells = [(k, m) for k in range(K) for m in range(M)]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda km: _safe_cell(run_cell, *km), cells))
    else:
        results = [_safe_cell(run_cell, k, m) for k, m in cells]

    for (k, m), outcome in zip(cells, results):
        if isinstance(outcome, Exception):
            warnings.warn(
                f"candidate {candidates[m].name} failed on split {k}: {outcome}",
                stacklevel=2)
            flags.append(f"failed:{candidates[m].name}:split{k}")
            ensembles[m].append(None)
            etas_store[m].append(None)
        else:
            scores[k, m], member, etas = outcome
            ensembles[m].append(member)
            etas_store[m].append(etas)

    mean_cvi = scores.mean(axis=0)
    usable = [m for m in range(M) if np.isfinite(scores[:, m]).any()]
    if not usable:
        raise RuntimeError("every candidate failed on every split")
    finite_means = [m for m in range(M) if math.isfinite(mean_cvi[m])]
    pool = finite_means if finite_means else usable
    selected = min(pool, key=lambda m: (mean_cvi[m], m))

    refit_stream = rng.child("final-refit")
    final = fit_method(candidates[selected], d, alpha, refit_stream)
    return SelectionResult(
        candidates=list(candidates), scores=scores, mean_cvi=mean_cvi,
        selected=selected, ensembles=ensembles, final_predictor=final,
        alpha=alpha, trust_margin=trust_margin, flags=flags, etas=etas_store,
        dataset=d, refit_stream=refit_stream,
    )


def _safe_cell(fn, k, m):
    try:
        return fn(k, m)
    except Exception as exc:  # noqa: BLE001 - scored as +inf by the caller
        return exc


def trust_score(result: SelectionResult, x) -> np.ndarray:
    """Mean of the winner's retained members at x (vector or single row)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    members = [m for m in result.ensembles[result.selected] if m is not None]
    if not members:
        raise RuntimeError("the selected candidate retained no usable members")
    vals = np.mean([m.predict(X) for m in members], axis=0)
    return float(vals[0]) if single else vals


def predict_with_trust(result: SelectionResult, x):
    """Interval from the full-data refit plus the trust score and a low-trust
    flag (trust below 1 - alpha - margin)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    l, u = result.final_predictor.predict(X)
    trust = trust_score(result, X)
    flag = trust < (1.0 - result.alpha - result.trust_margin)
    if single:
        return (float(l[0]), float(u[0])), float(trust[0]), bool(flag[0])
    return (l, u), trust, flag
