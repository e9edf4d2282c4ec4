"""
Log returns, annualized realized variance over non-overlapping n-day windows,
pairing with volatility-index observations, and mean-ratio rescaling.

Units: realized and implied variances are annualized and expressed in index
points squared (percent^2 per annum), so RV^2 is directly comparable to VIX^2.
"""
from __future__ import annotations

import datetime as dt
import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyOverlap,
    InputError,
    NonPositiveRatio,
    SlopeUndefined,
    TooShort,
    ZeroDenominatorMean,
)
from .marketdata import DatedSeries, IndexSeries, PriceSeries, align

TRADING_DAYS_PER_YEAR = 252
CALENDAR_DAYS_PER_YEAR = 365
MONTH_TRADING_DAYS = 21
INDEX_HORIZON_DAYS = 30

# Rescaling ratios implied purely by the annualization conventions.
THEORY_RATIOS = {
    "theory_365_252": CALENDAR_DAYS_PER_YEAR / TRADING_DAYS_PER_YEAR,
    "theory_30_21": INDEX_HORIZON_DAYS / MONTH_TRADING_DAYS,
}


class Alignment(str, enum.Enum):
    CONCURRENT = "concurrent"
    PRECEDING = "preceding"


@dataclass(frozen=True, eq=False)
class ReturnSeries(DatedSeries):
    """Daily log returns dated by the later day.

    ``start_dates[i]`` is the date of the earlier price, so a window of returns
    ``i..j`` covers the interval from ``start_dates[i]`` to ``dates[j]``.
    """

    start_dates: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        if not np.all(np.isfinite(self.values)):
            raise InputError("returns must be finite")
        starts = self.dates if self.start_dates is None else self.start_dates
        starts = np.asarray(starts, dtype="datetime64[D]")
        if starts.shape != self.dates.shape:
            raise InputError("start_dates must match dates")
        starts.setflags(write=False)
        object.__setattr__(self, "start_dates", starts)

    def _extra_eq(self, other):
        return np.array_equal(self.start_dates, other.start_dates)


@dataclass(frozen=True, eq=False)
class VarianceSeries(DatedSeries):
    """Annualized variance observations.

    ``window_n`` is the number of daily returns per observation, or ``None``
    for squared index levels; ``annualization`` is the per-year factor that was
    applied (``None`` when not applicable).
    """

    window_n: int | None = None
    annualization: float | None = None

    def __post_init__(self):
        super().__post_init__()
        if np.any(~(self.values >= 0)):
            raise InputError("variances must be non-negative")

    def _extra_eq(self, other):
        return self.window_n == other.window_n and self.annualization == other.annualization


@dataclass(frozen=True)
class ScalingReport:
    numerator_mean: float
    denominator_mean: float
    ratio: float
    period: tuple[dt.date, dt.date]
    count: int


@dataclass(frozen=True)
class VarianceScaling:
    """Sample variance of n-day mean squared returns for several n, plus the
    OLS slope/intercept of log(variance) against log(n)."""

    n_values: tuple[int, ...]
    variances: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    intercept: float


def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise TooShort("need at least two prices to form a return")
    s = prices.values
    return ReturnSeries(prices.dates[1:], np.log(s[1:] / s[:-1]),
                        start_dates=prices.dates[:-1])


def _window_bounds(length: int, n: int) -> int:
    if n < 1:
        raise ValueError("window length must be a positive integer")
    if length < n:
        raise TooShort(f"{length} returns cannot fill a window of {n}")
    return length // n


def realized_variance(returns: ReturnSeries, n: int = MONTH_TRADING_DAYS,
                      trading_days_per_year: float = TRADING_DAYS_PER_YEAR) -> VarianceSeries:
    """Annualized realized variance over consecutive non-overlapping windows.

    RV^2 = 100^2 * (trading_days_per_year / n) * sum(r_i^2) for each complete
    block of ``n`` returns, starting at the first return; a trailing partial
    block is dropped. Each value is dated by the last day of its window.
    """
    k = _window_bounds(len(returns), n)
    r = returns.values[: k * n].reshape(k, n)
    rv2 = 100.0 ** 2 * (trading_days_per_year / n) * np.sum(r * r, axis=1)
    return VarianceSeries(returns.dates[n - 1: k * n: n], rv2,
                          window_n=n, annualization=float(trading_days_per_year))


def squared_index(index: IndexSeries) -> VarianceSeries:
    """VIX^2 / VXO^2: element-wise square of index levels."""
    return VarianceSeries(index.dates, index.values ** 2, window_n=None, annualization=None)


def paired_variance(returns: ReturnSeries, index_variance: DatedSeries,
                    n: int = MONTH_TRADING_DAYS,
                    alignment: Alignment | str = Alignment.CONCURRENT,
                    trading_days_per_year: float = TRADING_DAYS_PER_YEAR,
                    ) -> tuple[VarianceSeries, VarianceSeries]:
    """Pair monthly RV^2 windows with index observations.

    Windows are consecutive blocks of ``n`` returns. The anchor of window k is
    the trading day immediately before the window starts. ``concurrent`` pairs
    the index at that anchor with window k (what the index is forecasting);
    ``preceding`` pairs it with window k-1 (the month that just ended).
    Anchors missing from the index series are dropped.

    Returns ``(rv2, index2)`` both dated by the anchor date.
    """
    alignment = Alignment(alignment)
    rv = realized_variance(returns, n, trading_days_per_year)
    k = len(rv)
    anchors = returns.start_dates[0: k * n: n]
    if alignment is Alignment.CONCURRENT:
        rv_vals = rv.values
    else:
        anchors = anchors[1:]
        rv_vals = rv.values[:-1]
    pos = np.searchsorted(index_variance.dates, anchors)
    pos_c = np.minimum(pos, max(len(index_variance) - 1, 0))
    hit = (pos < len(index_variance)) & (index_variance.dates[pos_c] == anchors)
    if not np.any(hit):
        raise EmptyOverlap("no window anchor date is present in the index series")
    attrs = dict(window_n=n, annualization=float(trading_days_per_year))
    rv2 = VarianceSeries(anchors[hit], rv_vals[hit], **attrs)
    idx2 = VarianceSeries(anchors[hit], np.asarray(index_variance.values)[pos_c[hit]])
    return rv2, idx2


def mean_ratio(numer: DatedSeries, denom: DatedSeries,
               period: tuple[dt.date, dt.date] | None = None) -> ScalingReport:
    """Ratio of arithmetic means over the dates both series share in ``period``."""
    if period is not None:
        numer = numer.between(*period)
        denom = denom.between(*period)
    if len(numer) == 0 or len(denom) == 0:
        raise EmptyOverlap("a series has no observations in the period")
    common = np.intersect1d(numer.dates, denom.dates)
    if common.size == 0:
        raise EmptyOverlap("series share no dates in the period")
    panel = align([("numer", numer), ("denom", denom)])
    num_mean = float(np.mean(panel.columns["numer"]))
    den_mean = float(np.mean(panel.columns["denom"]))
    if den_mean == 0.0:
        raise ZeroDenominatorMean("denominator mean is zero")
    start = panel.dates[0].item() if period is None else period[0]
    end = panel.dates[-1].item() if period is None else period[1]
    return ScalingReport(num_mean, den_mean, num_mean / den_mean, (start, end), len(panel))


def scale_series(series: VarianceSeries, ratio: float) -> VarianceSeries:
    if not ratio > 0:
        raise NonPositiveRatio(f"scaling ratio must be positive, got {ratio}")
    return VarianceSeries(series.dates, series.values * ratio,
                          window_n=series.window_n, annualization=series.annualization)


def mean_squared_return_samples(returns: ReturnSeries | np.ndarray, n: int) -> np.ndarray:
    """(1/n) * sum(r_i^2) over consecutive non-overlapping windows of n returns."""
    r = np.asarray(getattr(returns, "values", returns), dtype=float)
    k = _window_bounds(r.size, n)
    r = r[: k * n].reshape(k, n)
    return np.mean(r * r, axis=1)


def loglog_slope(x, y) -> tuple[float, float]:
    """OLS fit of log(y) = intercept + slope * log(x); returns (slope, intercept).

    Points with y <= 0 are excluded with a warning; fewer than two usable
    points (or a single distinct x) raises ``SlopeUndefined``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > 0
    if not np.all(keep):
        warnings.warn(f"excluding {int(np.sum(~keep))} non-positive points from log-log fit",
                      RuntimeWarning, stacklevel=2)
    x, y = x[keep], y[keep]
    if x.size < 2 or np.unique(x).size < 2:
        raise SlopeUndefined("need at least two distinct positive points for a log-log slope")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def variance_vs_n(returns: ReturnSeries | np.ndarray, n_values) -> VarianceScaling:
    """Unbiased sample variance of the n-day mean squared return for each n."""
    n_values = tuple(int(n) for n in n_values)
    variances, counts = [], []
    for n in n_values:
        samples = mean_squared_return_samples(returns, n)
        if samples.size < 2:
            raise TooShort(f"n={n} leaves fewer than two windows")
        variances.append(float(np.var(samples, ddof=1)))
        counts.append(int(samples.size))
    slope, intercept = loglog_slope(n_values, variances)
    return VarianceScaling(n_values, tuple(variances), tuple(counts), slope, intercept)
