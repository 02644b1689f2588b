"""Least-squares fits used for epsilon-order and decay-rate estimates."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float
    n_points: int

    def to_json(self) -> dict:
        return asdict(self)


def linear_fit(x, y) -> Fit:
    """Straight line through (x, y) with the coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise ValueError("a fit needs at least two finite points")
    res = stats.linregress(x, y)
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue**2), int(x.size))


def order_fit(eps, err) -> Fit:
    """Slope of log(err) against log(eps): the fitted order p in err ~ C eps^p."""
    eps = np.asarray(eps, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err > 0
    return linear_fit(np.log(eps[keep]), np.log(err[keep]))


def decay_fit(eps, values) -> Fit:
    """Slope of log(values) against 1/eps; a negative slope -sigma means values ~ C e^{-sigma/eps}."""
    eps = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    return linear_fit(1.0 / eps[keep], np.log(v[keep]))
