"""Dataset container, CSV ingestion, and deterministic splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream

NOISE_NORMAL = "standard-normal"
NOISE_T2 = "student-t2"
_NOISE_FAMILIES = (NOISE_NORMAL, NOISE_T2)


class DataError(ValueError):
    """Raised when a file or array violates the dataset contract."""


@dataclass(frozen=True)
class OracleInfo:
    """Per-row generative annotations available for synthetic data.

    `mu` and `sigma` are the true conditional mean and noise scale of each
    row; `noise` names the standardized noise family.
    """

    mu: np.ndarray
    sigma: np.ndarray
    noise: str

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.noise not in _NOISE_FAMILIES:
            raise DataError(f"unknown noise family {self.noise!r}")
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise DataError("oracle mu/sigma must be equal-length vectors")
        if not np.all(self.sigma > 0):
            raise DataError("oracle sigma must be strictly positive")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix + response vector.

    Invariants enforced at construction: `X` is n-by-p finite, `y` has length
    n and is finite, `ids` are stable row indices, and an oracle (if present)
    annotates exactly the same n rows.
    """

    X: np.ndarray
    y: np.ndarray
    ids: np.ndarray = None
    feature_names: tuple = None
    oracle: OracleInfo | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        if X.ndim != 2:
            raise DataError("X must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError("y length must equal the X row count")
        if not np.all(np.isfinite(X)):
            raise DataError("X contains NaN/Inf")
        if not np.all(np.isfinite(y)):
            raise DataError("y contains NaN/Inf")
        ids = self.ids
        if ids is None:
            ids = np.arange(X.shape[0])
        ids = np.asarray(ids, dtype=int)
        if ids.shape != (X.shape[0],):
            raise DataError("ids must have one entry per row")
        names = self.feature_names
        if names is None:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        names = tuple(names)
        if len(names) != X.shape[1]:
            raise DataError("feature_names length must equal the column count")
        if self.oracle is not None and self.oracle.mu.shape[0] != X.shape[0]:
            raise DataError("oracle row count must equal n")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        """Row-subset view (copies), keeping ids and oracle rows aligned."""
        idx = np.asarray(indices, dtype=int)
        oracle = None
        if self.oracle is not None:
            oracle = OracleInfo(self.oracle.mu[idx], self.oracle.sigma[idx], self.oracle.noise)
        return Dataset(
            self.X[idx], self.y[idx], ids=self.ids[idx],
            feature_names=self.feature_names, oracle=oracle,
        )


@dataclass(frozen=True)
class SplitPlan:
    """A single train/eval partition of row positions."""

    train_indices: np.ndarray
    eval_indices: np.ndarray
    ratio: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train_indices", np.asarray(self.train_indices, dtype=int))
        object.__setattr__(self, "eval_indices", np.asarray(self.eval_indices, dtype=int))


def split(d: Dataset, ratio: float, rng: RngStream) -> SplitPlan:
    """Uniformly random train/eval partition with |train| = floor(ratio * n).

    Deterministic given `rng`; raises if either side would be empty.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    n = d.n
    if n < 2:
        raise DataError("need at least 2 rows to split")
    n_train = int(math.floor(ratio * n))
    if n_train == 0 or n_train == n:
        raise DataError(f"ratio {ratio} leaves an empty side for n={n}")
    perm = rng.generator().permutation(n)
    train = np.sort(perm[:n_train])
    evl = np.sort(perm[n_train:])
    return SplitPlan(train, evl, ratio, rng.seed)


def kfold(d: Dataset, K: int, rng: RngStream) -> list[np.ndarray]:
    """K disjoint folds covering all row positions, sizes differing by <= 1."""
    n = d.n
    if not 2 <= K <= n:
        raise DataError(f"K must satisfy 2 <= K <= n, got K={K}, n={n}")
    perm = rng.generator().permutation(n)
    base, extra = divmod(n, K)
    folds = []
    start = 0
    for k in range(K):
        size = base + (1 if k < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric cell at row {row}, column {col!r}: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"NaN/Inf cell at row {row}, column {col!r}: {text!r}")
    return value


def load_csv(path, target: str) -> Dataset:
    """Load a comma-separated, header-first, UTF-8 file into a Dataset.

    All non-target columns become features, in header order. Any missing
    file, missing target column, non-numeric cell, or NaN/Inf cell is
    rejected with the offending row/column named.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise DataError(f"target column {target!r} not found in header {header}")
        t_idx = header.index(target)
        feat_names = [h for i, h in enumerate(header) if i != t_idx]
        rows_X, rows_y = [], []
        for r, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(f"row {r} has {len(row)} cells, expected {len(header)}")
            vals = [_parse_cell(cell, r, header[i]) for i, cell in enumerate(row)]
            rows_y.append(vals[t_idx])
            rows_X.append([v for i, v in enumerate(vals) if i != t_idx])
    if not rows_y:
        raise DataError(f"file has a header but no data rows: {path}")
    X = np.asarray(rows_X, dtype=float)
    y = np.asarray(rows_y, dtype=float)
    return Dataset(X, y, feature_names=tuple(feat_names))


def write_csv(d: Dataset, path, target: str = "target") -> None:
    """Write the dataset back out with full round-trip precision.

    Floats are printed with `repr`, which is the shortest string that parses
    back to the identical double. If the dataset carries oracle annotations
    they land in a `<path>.oracle.csv` sidecar with mu/sigma/noise columns.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [target])
        for i in range(d.n):
            writer.writerow([repr(float(v)) for v in d.X[i]] + [repr(float(d.y[i]))])
    if d.oracle is not None:
        with open(str(path) + ".oracle.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["mu", "sigma", "noise_family"])
            for i in range(d.n):
                writer.writerow([repr(float(d.oracle.mu[i])),
                                 repr(float(d.oracle.sigma[i])), d.oracle.noise])


def load_oracle_sidecar(d: Dataset, path) -> Dataset:
    """Attach oracle annotations stored in a `write_csv` sidecar file."""
    mu, sigma, fams = [], [], set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["mu", "sigma", "noise_family"]:
            raise DataError(f"unexpected oracle sidecar header: {header}")
        for r, row in enumerate(reader, start=1):
            mu.append(_parse_cell(row[0], r, "mu"))
            sigma.append(_parse_cell(row[1], r, "sigma"))
            fams.add(row[2])
    if len(fams) != 1:
        raise DataError(f"oracle sidecar mixes noise families: {sorted(fams)}")
    oracle = OracleInfo(np.asarray(mu), np.asarray(sigma), fams.pop())
    if oracle.mu.shape[0] != d.n:
        raise DataError("oracle sidecar row count does not match the dataset")
    return Dataset(d.X, d.y, ids=d.ids, feature_names=d.feature_names, oracle=oracle)
