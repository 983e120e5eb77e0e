"""Small statistical helpers: confidence intervals and simple fits."""

import math

import numpy as np
from scipy.special import ndtri
from scipy.stats import linregress


def z_value(confidence=0.95):
    return float(ndtri(0.5 + confidence / 2.0))


def wilson_interval(successes, n, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = z_value(confidence)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def mean_ci(samples, confidence=0.95):
    """(mean, std_error, (lo, hi)) by the normal approximation."""
    x = np.asarray(samples, dtype=float)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    z = z_value(confidence)
    return m, se, (m - z * se, m + z * se)


def weighted_mean_se(weights, values):
    """Self-normalized importance-sampling mean and its linearized SE."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must have positive sum")
    wn = w / total
    m = float(wn @ v)
    se = float(math.sqrt(np.sum(wn ** 2 * (v - m) ** 2)))
    return m, se


def log_tail_slope(thresholds, tail_probs):
    """Least-squares slope of log tail probability against the threshold.

    Zero tail probabilities are dropped (they carry no slope information).
    Returns (slope, intercept, r_value).
    """
    t = np.asarray(thresholds, dtype=float)
    p = np.asarray(tail_probs, dtype=float)
    keep = p > 0
    if keep.sum() < 2:
        raise ValueError("need at least two positive tail points to fit")
    res = linregress(t[keep], np.log(p[keep]))
    return float(res.slope), float(res.intercept), float(res.rvalue)


def intervals_overlap(a, b):
    return a[0] <= b[1] and b[0] <= a[1]
