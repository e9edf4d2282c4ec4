"""Kolmogorov-Smirnov distances (statistics only, no p-values)."""
from __future__ import annotations

import numpy as np

from ..errors import EmptySample


def ks_from_cdf(cdf_sorted: np.ndarray) -> float:
    """KS distance given F evaluated at the sorted sample.

    D = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
    """
    f = np.asarray(cdf_sorted, dtype=float)
    n = f.size
    if n == 0:
        raise EmptySample("KS statistic of an empty sample")
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - f), np.max(f - (i - 1) / n))
    return float(min(max(d, 0.0), 1.0))


def ks_one_sample(sample, cdf) -> float:
    """Sup-distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    return ks_from_cdf(np.asarray(cdf(x), dtype=float))


def ks_two_sample(a, b) -> float:
    """Sup-distance between the empirical CDFs of two samples."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySample("two-sample KS needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
