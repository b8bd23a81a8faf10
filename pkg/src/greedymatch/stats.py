"""Small-sample statistics shared by the experiment harness and analytics."""

from __future__ import annotations

import math
import warnings

import numpy as np

Z95 = 1.959963984540054
MIN_SAMPLES_FOR_NORMAL = 30


def mean_ci(x) -> tuple[float, float, float]:
    """``(mean, standard error, 95% half-width)``; NaN spread for a single sample."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    mean = float(x.mean())
    if x.size < 2:
        return mean, float("nan"), float("nan")
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    return mean, se, Z95 * se


def ratio_of_means(num, den) -> tuple[float, float]:
    """``mean(num) / mean(den)`` and its delta-method 95% half-width."""
    a = np.asarray(num, dtype=float)
    b = np.asarray(den, dtype=float)
    ma, mb = float(a.mean()), float(b.mean())
    if mb == 0.0:
        return (1.0 if ma == 0.0 else float("inf")), float("nan")
    r = ma / mb
    if a.size < 2:
        return r, float("nan")
    # linearised residuals a - r b
    resid = a - r * b
    se = float(resid.std(ddof=1) / (math.sqrt(a.size) * abs(mb)))
    return r, Z95 * se


def mean_of_ratios(num, den) -> tuple[float, float]:
    a = np.asarray(num, dtype=float)
    b = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(b > 0, a / np.where(b > 0, b, 1.0), 1.0)
    mean, _, half = mean_ci(r)
    return mean, half


def warn_small(n: int) -> None:
    if n < MIN_SAMPLES_FOR_NORMAL:
        warnings.warn(f"only {n} samples: normal-approximation CI is unreliable",
                      RuntimeWarning, stacklevel=3)
