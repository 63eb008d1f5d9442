"""Paired t-test over matched score lists."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betainc


class DegenerateSampleError(ValueError):
    pass


def paired_t_test(xs, ys) -> tuple[float, float]:
    """Two-sided paired t-test; returns (t, p).

    t = mean(d) / (sd(d) / sqrt(n)) with the n-1 variance denominator;
    the p-value comes from the Student-t survival function expressed through
    the regularized incomplete beta function.  An all-zero difference vector
    is the identical-samples case and returns (0, 1).
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("paired samples must be 1-d and equal length")
    n = x.size
    if n < 2:
        raise DegenerateSampleError("degenerate sample: need n >= 2")
    d = x - y
    if not d.any():
        return 0.0, 1.0
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("degenerate sample: zero variance, nonzero mean")
    t = float(d.mean()) / (sd / math.sqrt(n))
    nu = n - 1
    p = float(betainc(nu / 2.0, 0.5, nu / (nu + t * t)))
    return t, p
