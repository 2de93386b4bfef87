"""Noise-family CDFs and quantiles used by interval constructors and oracles.

The normal CDF goes through `erf` (double-precision rational/series
implementation, absolute error well under 1e-12). The t(2) CDF has the exact
closed form F(t) = 1/2 + t / (2 * sqrt(2 + t^2)), inverted analytically. The
general Student-t quantile is a bisection on the CDF expressed through the
regularized incomplete beta function, run to an interval width of 1e-10.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .data import NOISE_NORMAL, NOISE_T2

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF, elementwise."""
    return 0.5 * (1.0 + special.erf(np.asarray(x, dtype=float) / _SQRT2))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF for scalar p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    return float(_SQRT2 * special.erfinv(2.0 * p - 1.0))


def t2_cdf(x):
    """CDF of the t distribution with 2 degrees of freedom (closed form)."""
    x = np.asarray(x, dtype=float)
    return 0.5 + x / (2.0 * np.sqrt(2.0 + x * x))


def t2_quantile(p: float) -> float:
    """Inverse of `t2_cdf` for scalar p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    u = 2.0 * p - 1.0  # in (-1, 1)
    return float(u * math.sqrt(2.0 / (1.0 - u * u)))


def student_t_cdf(x: float, df: float) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x == 0.0:
        return 0.5
    z = df / (df + x * x)
    tail = 0.5 * special.betainc(df / 2.0, 0.5, z)
    return 1.0 - tail if x > 0 else tail


def student_t_quantile(p: float, df: float, tol: float = 1e-10) -> float:
    """Inverse Student-t CDF by bisection, to interval width `tol`.

    Symmetry pins quantile(0.5) = 0 exactly; the bracket is grown
    geometrically before bisection.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_quantile(1.0 - p, df, tol)
    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e18:
            return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def noise_cdf(x, family: str):
    """CDF of a named standardized noise family, elementwise."""
    if family == NOISE_NORMAL:
        return normal_cdf(x)
    if family == NOISE_T2:
        return t2_cdf(x)
    raise ValueError(f"unknown noise family {family!r}")


def noise_quantile(p: float, family: str) -> float:
    if family == NOISE_NORMAL:
        return normal_quantile(p)
    if family == NOISE_T2:
        return t2_quantile(p)
    raise ValueError(f"unknown noise family {family!r}")
