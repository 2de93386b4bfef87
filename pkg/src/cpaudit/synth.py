"""Synthetic location-scale benchmarks with analytic coverage oracles.

Four generative settings plus a high-dimensional feasibility design, all of
the form y = mu(x) + sigma(x) * eps with a known standardized noise family.
Because mu, sigma and the noise CDF are known per row, the exact conditional
coverage of any interval [l, u] is F((u - mu) / sigma) - F((l - mu) / sigma),
which grounds the oracle validity index and the selection-deployment
protocol harness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conformal import IntervalPredictor, MethodConfig, fit_method
from .data import NOISE_NORMAL, NOISE_T2, Dataset, OracleInfo
from .distributions import noise_cdf, noise_quantile
from .learners import LearnerConfig
from .metrics import (
    cvi_report,
    hit_at_k,
    marginal_stats,
    ndcg_at_k,
    ranking_from_scores,
    weighted_kendall_tau,
    wsc,
)
from .reliability import EstimatorConfig, fit_member, generate_labels
from .rng import RngStream
from .selection import cc_select

SETTINGS = ("a", "b", "c", "d", "feasibility")
DEFAULT_P = 10

_BETA_AC = np.array([1.0] * 5 + [0.0] * 5)


def _as_stream(seed) -> RngStream:
    return seed if isinstance(seed, RngStream) else RngStream(int(seed))


def gen_setting_a(n: int, seed) -> Dataset:
    """Sparse linear mean, unit Gaussian noise; x ~ N(0, I_10)."""
    g = _as_stream(seed).generator()
    X = g.normal(size=(n, DEFAULT_P))
    mu = X @ _BETA_AC
    y = mu + g.normal(size=n)
    return Dataset(X, y, oracle=OracleInfo(mu, np.ones(n), NOISE_NORMAL))


def gen_setting_b(n: int, seed) -> Dataset:
    """Nonlinear interactions with t(2) noise; x ~ N(0, I_10).

    mu(x) = sin(2 pi x1) + 2 cos(pi x2) + 3 x3 x4 + x5.
    """
    g = _as_stream(seed).generator()
    X = g.normal(size=(n, DEFAULT_P))
    mu = (np.sin(2 * np.pi * X[:, 0]) + 2 * np.cos(np.pi * X[:, 1])
          + 3 * X[:, 2] * X[:, 3] + X[:, 4])
    y = mu + g.standard_t(2, size=n)
    return Dataset(X, y, oracle=OracleInfo(mu, np.ones(n), NOISE_T2))


def gen_setting_c(n: int, seed) -> Dataset:
    """Setting A's mean with covariate-driven scale sigma(x) = exp(0.5 x1)."""
    g = _as_stream(seed).generator()
    X = g.normal(size=(n, DEFAULT_P))
    mu = X @ _BETA_AC
    sigma = np.exp(0.5 * X[:, 0])
    y = mu + sigma * g.normal(size=n)
    return Dataset(X, y, oracle=OracleInfo(mu, sigma, NOISE_NORMAL))


def _skew_normal(g, size, shape=5.0):
    # constructive representation: delta |z0| + sqrt(1 - delta^2) z1
    delta = shape / math.sqrt(1.0 + shape * shape)
    z0 = g.normal(size=size)
    z1 = g.normal(size=size)
    return delta * np.abs(z0) + math.sqrt(1.0 - delta * delta) * z1


def _mixture_covariates(g, n, p):
    comp = g.integers(0, 3, size=(n, p))
    normal = g.normal(size=(n, p))
    skew = _skew_normal(g, (n, p))
    bern = g.integers(0, 2, size=(n, p)).astype(float)
    return np.where(comp == 0, normal, np.where(comp == 1, skew, bern))


def _dependent_covariates(raw: np.ndarray) -> np.ndarray:
    # sequential update in increasing column order, reading updated columns;
    # the first column is a fixed point of its clamped self-reference
    X = raw.copy()
    for j in range(X.shape[1]):
        src = max(0, j - 3)
        X[:, j] = 0.7 * raw[:, j] + 0.3 * X[:, src]
    return X


def gen_setting_d(n: int, p: int, seed, R: int = None):
    """Mixture covariates with within-row dependence, cubic heteroscedastic
    scale, and t(2) noise.

    Returns (dataset, replicates): `replicates` is an n-by-R matrix of fresh
    responses per row when R is given, else None.
    """
    if p < 5:
        raise ValueError(f"need p >= 5 to place a 5-sparse coefficient vector, got {p}")
    stream = _as_stream(seed)
    g = stream.generator()
    support = g.choice(p, size=5, replace=False)
    beta = np.zeros(p)
    beta[support] = 1.0

    X = _dependent_covariates(_mixture_covariates(g, n, p))
    mu = X @ beta

    aux = _dependent_covariates(_mixture_covariates(
        stream.child("scale-denominator").generator(), 10_000, p))
    denom = float(np.mean(np.abs(aux @ beta) ** 3)) + 1e-9
    sigma = 1.0 + 2.0 * np.abs(mu) ** 3 / denom

    y = mu + sigma * g.standard_t(2, size=n)
    ds = Dataset(X, y, oracle=OracleInfo(mu, sigma, NOISE_T2))
    reps = None
    if R is not None:
        gr = stream.child("replicates").generator()
        reps = mu[:, None] + sigma[:, None] * gr.standard_t(2, size=(n, R))
    return ds, reps


def gen_feasibility(d: int, n_train: int, n_eval: int, seed) -> Dataset:
    """High-dimensional design whose coverage surface is driven by x1 alone:
    x ~ Unif([-1, 1]^d), mu = ||x||^(1/2), sigma = 0.5 + |x1|, Gaussian noise.

    The first n_train rows are meant for interval training, the remaining
    n_eval for reliability learning.
    """
    g = _as_stream(seed).generator()
    n = n_train + n_eval
    X = g.uniform(-1.0, 1.0, size=(n, d))
    mu = np.sqrt(np.linalg.norm(X, axis=1))
    sigma = 0.5 + np.abs(X[:, 0])
    y = mu + sigma * g.normal(size=n)
    return Dataset(X, y, oracle=OracleInfo(mu, sigma, NOISE_NORMAL))


def generate_setting(setting: str, n: int, seed, p: int = DEFAULT_P) -> Dataset:
    """Uniform entry point used by the protocol harness and the CLI."""
    setting = setting.lower()
    if setting == "a":
        return gen_setting_a(n, seed)
    if setting == "b":
        return gen_setting_b(n, seed)
    if setting == "c":
        return gen_setting_c(n, seed)
    if setting == "d":
        ds, _ = gen_setting_d(n, p, seed)
        return ds
    if setting == "feasibility":
        return gen_feasibility(p, n, 0, seed)
    raise ValueError(f"unknown setting {setting!r}; know {SETTINGS}")


def oracle_coverage(l, u, mu, sigma, noise: str) -> np.ndarray:
    """Exact conditional coverage of [l, u] rows under the generative model."""
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be strictly positive")
    if np.any(l > u):
        raise ValueError("need l <= u")
    with np.errstate(invalid="ignore"):
        zu = (u - mu) / sigma
        zl = (l - mu) / sigma
        hi = np.where(np.isposinf(zu), 1.0, noise_cdf(np.where(np.isfinite(zu), zu, 0.0), noise))
        hi = np.where(np.isneginf(zu), 0.0, hi)
        lo = np.where(np.isneginf(zl), 0.0, noise_cdf(np.where(np.isfinite(zl), zl, 0.0), noise))
        lo = np.where(np.isposinf(zl), 1.0, lo)
    return hi - lo


def oracle_coverage_for(pred: IntervalPredictor, test: Dataset) -> np.ndarray:
    if test.oracle is None:
        raise ValueError("test dataset carries no oracle annotations")
    l, u = pred.predict(test.X)
    return oracle_coverage(l, u, test.oracle.mu, test.oracle.sigma, test.oracle.noise)


def oracle_cvi(pred: IntervalPredictor, test: Dataset, alpha: float) -> float:
    """Mean absolute deviation of the exact conditional coverage from 1 - alpha."""
    eta = oracle_coverage_for(pred, test)
    return float(np.mean(np.abs(eta - (1.0 - alpha))))


def mc_oracle_coverage(pred: IntervalPredictor, test: Dataset, draws: int,
                       rng: RngStream) -> np.ndarray:
    """Monte Carlo estimate of the conditional coverage: fresh noise draws
    per test row, fraction landing inside the predicted interval."""
    if test.oracle is None:
        raise ValueError("test dataset carries no oracle annotations")
    l, u = pred.predict(test.X)
    g = rng.generator()
    if test.oracle.noise == NOISE_NORMAL:
        eps = g.normal(size=(test.n, draws))
    else:
        eps = g.standard_t(2, size=(test.n, draws))
    sims = test.oracle.mu[:, None] + test.oracle.sigma[:, None] * eps
    return np.mean((l[:, None] <= sims) & (sims <= u[:, None]), axis=1)


class OracleStubPredictor(IntervalPredictor):
    """Test fixture with exact conditional coverage 1 - alpha by construction.

    Bound to the rows of one oracle-annotated dataset; prediction is
    positional, so it must be queried with that dataset's X (or a row subset
    starting at 0). Never exposed as a selectable method.
    """

    method = "oracle-stub"
    conformal = False

    def __init__(self, alpha: float, data: Dataset):
        super().__init__(alpha)
        if data.oracle is None:
            raise ValueError("the stub needs oracle annotations")
        q = noise_quantile(1.0 - alpha / 2.0, data.oracle.noise)
        self._lo = data.oracle.mu - q * data.oracle.sigma
        self._hi = data.oracle.mu + q * data.oracle.sigma
        self._X = data.X

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if n > self._X.shape[0] or not np.array_equal(X, self._X[:n]):
            raise ValueError("stub predictor only serves the rows it was built on")
        return self._lo[:n].copy(), self._hi[:n].copy()


def _quantile_grid(values: np.ndarray, grid: int = 100) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=float))
    idx = np.minimum((np.ceil(np.arange(1, grid + 1) / grid * v.size) - 1).astype(int),
                     v.size - 1)
    return v[idx]


def profile_distance(etas_est, etas_oracle, grid: int = 100) -> float:
    """Mean absolute gap between the two quantile profiles on a common grid
    (the natural 1-D transport distance between the value distributions)."""
    return float(np.mean(np.abs(_quantile_grid(etas_est, grid)
                                - _quantile_grid(etas_oracle, grid))))


@dataclass
class ProtocolReport:
    """Nested, JSON-ready results of `run_protocol` (see its docstring)."""

    data: dict

    def setting(self, name: str) -> dict:
        return self.data["settings"][name.lower()]


def _protocol_single(setting: str, methods, n_select, n_test, reps, est,
                     alpha, rng, rho, K, jobs=1):
    method_names = [m.name for m in methods]
    per_rep = []
    for r in range(reps):
        stream = rng.child((setting, "rep", r))
        select_data = generate_setting(setting, n_select, stream.child("select"))
        test_data = generate_setting(setting, n_test, stream.child("test"))

        try:
            result = cc_select(select_data, alpha, list(methods), K=K, rho=rho,
                               est=est, rng=stream.child("cc"), jobs=jobs)
            est_cvi = result.mean_cvi.tolist()
            selected = result.selected
            pooled_etas = [
                (np.concatenate([e for e in result.etas[m] if e is not None])
                 if any(e is not None for e in result.etas[m]) else None)
                for m in range(len(methods))
            ]
        except Exception as exc:  # noqa: BLE001 - a fully failed rep is recorded
            warnings.warn(f"selection failed on rep {r}: {exc}", stacklevel=2)
            est_cvi = [math.inf] * len(methods)
            selected = None
            pooled_etas = [None] * len(methods)

        oracle_vals, coverage, lengths, wsc_vals, w1 = [], [], [], [], []
        for m, config in enumerate(methods):
            try:
                full_pred = fit_method(config, select_data, alpha,
                                       stream.child(("deploy", m)))
                eta_oracle = oracle_coverage_for(full_pred, test_data)
                oracle_vals.append(float(np.mean(np.abs(eta_oracle - (1 - alpha)))))
                cov, ln = marginal_stats(full_pred, test_data)
                coverage.append(cov)
                lengths.append(ln)
                lo, hi = full_pred.predict(test_data.X)
                covr = ((lo <= test_data.y) & (test_data.y <= hi)).astype(float)
                wsc_vals.append(wsc(test_data.X, covr, delta=0.1, n_directions=20,
                                    rng=stream.child(("wsc", m))).value)
                w1.append(profile_distance(pooled_etas[m], eta_oracle)
                          if pooled_etas[m] is not None else None)
            except Exception as exc:  # noqa: BLE001
                warnings.warn(
                    f"{config.name} failed full refit on rep {r}: {exc}", stacklevel=2)
                oracle_vals.append(math.inf)
                coverage.append(math.nan)
                lengths.append(math.nan)
                wsc_vals.append(math.nan)
                w1.append(None)

        est_rank = ranking_from_scores(est_cvi)
        oracle_rank = ranking_from_scores(oracle_vals)
        d_true = np.where(np.isfinite(oracle_vals), oracle_vals,
                          np.nanmax(np.where(np.isfinite(oracle_vals),
                                             oracle_vals, 0.0)) + 1.0)
        per_rep.append({
            "rep": r,
            "est_cvi": est_cvi,
            "oracle_cvi": oracle_vals,
            "coverage": coverage,
            "avg_length": lengths,
            "wsc": wsc_vals,
            "w1": w1,
            "selected": selected,
            "est_rank": est_rank.tolist(),
            "oracle_rank": oracle_rank.tolist(),
            "tau_w": weighted_kendall_tau(d_true, est_rank),
            "ndcg1": ndcg_at_k(d_true, est_rank, 1),
            "ndcg3": ndcg_at_k(d_true, est_rank, 3),
            "hit3": hit_at_k(oracle_rank, est_rank, 3),
        })

    summary = {}
    for key in ("tau_w", "ndcg1", "ndcg3", "hit3"):
        vals = np.array([row[key] for row in per_rep], dtype=float)
        summary[key] = {"mean": float(vals.mean()), "sd": float(vals.std(ddof=1))
                        if vals.size > 1 else 0.0}
    return {"methods": method_names, "per_rep": per_rep, "summary": summary,
            "n_select": n_select, "n_test": n_test, "rho": rho, "K": K}


def run_protocol(settings, methods, n_select: int = 2000, n_test: int = 2000,
                 reps: int = 20, est: EstimatorConfig = None, alpha: float = 0.1,
                 rng: RngStream = None, rho: float = 0.5, K: int = 5,
                 sweeps: dict = None, jobs: int = 1) -> ProtocolReport:
    """Selection-deployment harness over synthetic settings.

    Per repetition: draw a selection set and an independent test set, rank the
    candidate methods by repeated-split reliability scoring on the selection
    set, rank them again by the exact oracle validity index of full-data
    refits on the test set, and score the agreement (weighted rank
    correlation, top-k utility, top-3 overlap). `sweeps` may map "rho" and/or
    "N" to value lists; each value re-runs the protocol and lands in its own
    report slice.
    """
    est = est or EstimatorConfig()
    rng = rng or RngStream(0)
    data = {"alpha": alpha, "reps": reps, "settings": {}, "sweeps": {}}
    for setting in settings:
        data["settings"][setting.lower()] = _protocol_single(
            setting.lower(), methods, n_select, n_test, reps, est, alpha,
            rng.child(("protocol", setting.lower())), rho, K, jobs=jobs)
    for axis, values in (sweeps or {}).items():
        if axis not in ("rho", "N"):
            raise ValueError(f"unknown sweep axis {axis!r}")
        data["sweeps"][axis] = {}
        for value in values:
            slice_rho = float(value) if axis == "rho" else rho
            slice_n = int(value) if axis == "N" else n_select
            slice_data = {}
            for setting in settings:
                slice_data[setting.lower()] = _protocol_single(
                    setting.lower(), methods, slice_n, n_test, reps, est, alpha,
                    rng.child(("sweep", axis, str(value), setting.lower())),
                    slice_rho, K, jobs=jobs)
            data["sweeps"][axis][str(value)] = slice_data
    return ProtocolReport(data)


def feasibility_experiment(d: int = 20, n_train: int = 2000, n_eval: int = 500,
                           n_test: int = 500, reps: int = 10, mc_draws: int = 2000,
                           est: EstimatorConfig = None, alpha: float = 0.1,
                           rng: RngStream = None, base: LearnerConfig = None) -> dict:
    """Accuracy of the learned coverage surface against a Monte Carlo oracle.

    Per repetition: fit a residual-score interval method on n_train rows of
    the high-dimensional design, learn a single reliability member from
    n_eval coverage labels, and compare its estimates on fresh test rows to
    the simulated true coverage of the fitted intervals. Returns per-rep MAE
    and RMSE.
    """
    est = est or EstimatorConfig()
    rng = rng or RngStream(0)
    if base is None:
        base = LearnerConfig.make("forest", trees=100, max_depth=None,
                                  min_leaf=5, max_features=max(1, d // 3))
    mae, rmse = [], []
    for r in range(reps):
        stream = rng.child(("feasibility", r))
        data = gen_feasibility(d, n_train, n_eval, stream.child("data"))
        train = data.subset(np.arange(n_train))
        evl = data.subset(np.arange(n_train, n_train + n_eval))
        pred = fit_method(MethodConfig.make("cp-residual", base=base),
                          train, alpha, stream.child("cp"))
        labels = generate_labels(pred, evl)
        member = fit_member(labels, est, stream.child("member"))
        test = gen_feasibility(d, n_test, 0, stream.child("test"))
        eta_hat = member.predict(test.X)
        eta_true = mc_oracle_coverage(pred, test, mc_draws, stream.child("mc"))
        gap = eta_hat - eta_true
        mae.append(float(np.mean(np.abs(gap))))
        rmse.append(float(np.sqrt(np.mean(gap ** 2))))
    return {"d": d, "n_train": n_train, "n_eval": n_eval, "reps": reps,
            "mae": mae, "rmse": rmse,
            "mae_mean": float(np.mean(mae)), "rmse_mean": float(np.mean(rmse))}
