"""Small statistical helpers shared by the estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def z_value(level: float) -> float:
    return float(stats.norm.ppf(0.5 + level / 2))


def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = z_value(level)
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = max(0.0, centre - half)
    hi = min(1.0, centre + half)
    # guard the rounding at the extremes so that lo <= phat <= hi holds exactly
    return min(lo, phat), max(hi, phat)


def mean_interval(values, level: float = 0.95) -> tuple:
    """Sample mean with a normal-approximation interval."""
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean()) if n else float("nan")
    if n < 2:
        return mean, mean, mean, 0.0
    se = float(values.std(ddof=1)) / math.sqrt(n)
    z = z_value(level)
    return mean, mean - z * se, mean + z * se, se


@dataclass
class LogLinearFit:
    slope: float
    intercept: float
    r2: float
    points: int


def loglinear_fit(ns, values) -> LogLinearFit | None:
    """Least-squares fit of ``log(value) = intercept + slope * n`` on positive values."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if keep.sum() < 2:
        return None
    x = ns[keep]
    y = np.log(values[keep])
    res = stats.linregress(x, y)
    if np.ptp(y) == 0:
        r2 = 0.0
    else:
        r2 = float(res.rvalue**2)
    return LogLinearFit(float(res.slope), float(res.intercept), r2, int(keep.sum()))
