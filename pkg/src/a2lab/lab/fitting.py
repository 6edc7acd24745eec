"""Least-squares exponent fits on log-log data."""

from __future__ import annotations

import math

import numpy as np


def fit_log2(lx, ly) -> tuple[float, float, float]:
    """OLS of ``ly`` on ``lx`` (both already base-2 logs).

    Returns ``(slope, intercept, residual)`` with the residual the root
    mean square of the fit errors.
    """
    lx = np.asarray(lx, dtype=float)
    ly = np.asarray(ly, dtype=float)
    if lx.size < 3 or lx.size != ly.size:
        raise ValueError("need at least 3 paired points")
    if not (np.all(np.isfinite(lx)) and np.all(np.isfinite(ly))):
        raise ValueError("non-finite log values")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(intercept), float(math.sqrt(np.mean(resid**2)))


def fit_exponent(xs, ys) -> tuple[float, float, float]:
    """Fit ``y ~ C x^slope``; inputs must be positive."""
    xs, ys = list(xs), list(ys)
    if len(xs) < 3:
        raise ValueError("need at least 3 points")
    if any(x <= 0 for x in xs) or any(y <= 0 for y in ys):
        raise ValueError("inputs must be positive")
    return fit_log2([math.log2(x) for x in xs], [math.log2(y) for y in ys])
