"""
Report builders. Each function takes already-loaded data plus settings and
returns an ``emit.Report``; file handling lives in the CLI.
"""
from __future__ import annotations

import math

import numpy as np

from . import svmodels as sv
from .emit import Report
from .errors import ComputationError, DegenerateSample, InputError
from .fitting import (
    COMPOSITE_FAMILIES,
    CORE_FAMILIES,
    Family,
    check_sample,
    fit_mle,
    ks_two_sample,
    normalize_by_mean,
    rank_families,
)
from .implied import blend_terms, implied_variance
from .marketdata import PERIODS, IndexSeries, PriceSeries
from .realized import (
    THEORY_RATIOS,
    Alignment,
    log_returns,
    mean_ratio,
    mean_squared_return_samples,
    paired_variance,
    realized_variance,
    scale_series,
    squared_index,
    variance_vs_n,
)

SCALING_MODES = ("theory_365_252", "theory_30_21", "empirical_mean_ratio")

NAMED_REPORTS = ("table1", "table2", "table3-concurrent", "table-preceding",
                 "fig2-slope", "fig13", "fig14")


def _dates(series):
    return [str(d) for d in series.dates.astype("datetime64[D]")]


def _restrict(series, period):
    if period is None:
        return series
    return series.between(*period)


def pair(prices: PriceSeries, index: IndexSeries, n=21, alignment="concurrent", period=None):
    """(rv2, index2) paired at window anchors inside ``period``."""
    prices = _restrict(prices, period)
    index = _restrict(index, period)
    if len(index) == 0:
        raise InputError("index series has no observations in the period")
    return paired_variance(log_returns(prices), squared_index(index), n, alignment)


def scaling_ratio(mode: str, rv2, idx2) -> float:
    if mode in THEORY_RATIOS:
        return THEORY_RATIOS[mode]
    if mode == "empirical_mean_ratio":
        return mean_ratio(idx2, rv2).ratio
    raise ValueError(f"unknown scaling mode {mode!r}")


def _fit_rows(label, ranking):
    rows = []
    for rank, r in enumerate(ranking.results, start=1):
        rows.append((label, rank, r.family.value, r.label, list(r.params), r.ks,
                     r.log_likelihood, r.n, ";".join(r.flags)))
    for fam, reason in ranking.skipped:
        rows.append((label, None, fam.value, None, None, None, None, None, "skipped: " + reason))
    return rows


FIT_COLUMNS = ("sample", "rank", "family", "label", "params", "ks", "loglik", "n", "flags")


# -- single-purpose commands -------------------------------------------------

def rv_report(prices: PriceSeries, n=21, period=None, config=None) -> Report:
    rv = realized_variance(log_returns(_restrict(prices, period)), n)
    rep = Report("rv", config or {})
    rep.add_table("rv", ("date", "rv2"), zip(_dates(rv), rv.values.tolist()))
    rep.summary.update(windows=len(rv), mean_rv2=float(np.mean(rv.values)), n=n)
    return rep


def ratio_report(prices, index, n=21, alignment="concurrent", period=None,
                 families=CORE_FAMILIES, invert=False, config=None) -> Report:
    """Ratio RV^2/X^2 (or X^2/RV^2 with ``invert``), normalized by its mean, and
    fits of each family to it."""
    rv2, idx2 = pair(prices, index, n, alignment, period)
    raw = idx2.values / rv2.values if invert else rv2.values / idx2.values
    if not np.all(np.isfinite(raw)):
        raise ComputationError("ratio has non-finite entries (zero variance in a window or index)")
    norm = normalize_by_mean(raw)
    rep = Report("ratio", config or {})
    rep.add_table("ratio", ("date", "rv2", "index2", "ratio", "normalized"),
                  zip(_dates(rv2), rv2.values.tolist(), idx2.values.tolist(),
                      raw.tolist(), norm.tolist()))
    rep.summary.update(pairs=len(rv2), alignment=Alignment(alignment).value,
                       direction="index2/rv2" if invert else "rv2/index2",
                       mean_raw_ratio=float(np.mean(raw)))
    try:
        check_sample(norm, positive=False)
        ranking = rank_families(norm, families)
    except (DegenerateSample, ComputationError) as exc:
        rep.summary["fit_error"] = f"{type(exc).__name__}: {exc}"
        rep.add_table("fits", FIT_COLUMNS, [])
        return rep
    rep.add_table("fits", FIT_COLUMNS, _fit_rows("ratio", ranking))
    rep.summary["best_family"] = ranking.best.family.value
    rep.summary["best_ks"] = ranking.best.ks
    return rep


def compare_report(prices, index, n=21, scaling="empirical_mean_ratio", alignment="concurrent",
                   period=None, config=None) -> Report:
    rv2, idx2 = pair(prices, index, n, alignment, period)
    ratio = scaling_ratio(scaling, rv2, idx2)
    scaled = scale_series(rv2, ratio)
    ks = ks_two_sample(scaled.values, idx2.values)
    rep = Report("compare", config or {})
    rep.add_table("samples", ("date", "scaled_rv2", "index2"),
                  zip(_dates(scaled), scaled.values.tolist(), idx2.values.tolist()))
    rep.summary.update(ks=ks, scaling=scaling, ratio=ratio, pairs=len(rv2))
    return rep


def vix_report(chains, target_days=30.0, config=None) -> Report:
    results = [implied_variance(c) for c in chains]
    rep = Report("vix", config or {})
    rows = []
    for r in results:
        for c in r.contributions:
            rows.append((round(r.expiry_time_years * 365.0, 9), c.strike, c.delta_k, c.price, c.value))
    rep.add_table("contributions", ("expiry_days", "strike", "delta_k", "price", "value"), rows)
    rep.add_table("terms", ("expiry_days", "k0", "variance", "volatility", "forward_correction"),
                  [(round(r.expiry_time_years * 365.0, 9), r.k0, r.variance, r.volatility,
                    r.forward_correction) for r in results])
    if len(results) >= 2:
        near, nxt = _bracket(results, target_days)
        var = blend_terms(near, nxt, target_days, extrapolate=True)
        rep.summary.update(blended_variance=var, index=math.sqrt(max(var, 0.0)))
    else:
        rep.summary.update(blended_variance=results[0].variance, index=results[0].volatility)
    rep.summary["target_days"] = target_days
    return rep


def _bracket(results, target_days):
    """Near/next pair: the last expiry at or before target and the one after,
    else the two closest expiries."""
    t = target_days / 365.0
    for a, b in zip(results, results[1:]):
        if a.expiry_time_years <= t <= b.expiry_time_years:
            return a, b
    return (results[0], results[1]) if t < results[0].expiry_time_years else (results[-2], results[-1])


def simulate_report(params: sv.SVParams, v0=None, dt=0.1, steps=10_000, seed=0,
                    paths=1, sample_every=1.0, config=None) -> Report:
    v0 = params.theta if v0 is None else v0
    arr = sv.simulate_paths(params, v0, dt, steps, paths, seed)
    stride = max(int(round(sample_every / dt)), 1)
    rep = Report("simulate", config or {})
    times = (np.arange(arr.shape[1]) * dt)[::stride]
    rows = []
    for j in range(arr.shape[0]):
        for t, v in zip(times.tolist(), arr[j, ::stride].tolist()):
            rows.append((j, t, v))
    rep.add_table("path", ("path", "t", "v"), rows)
    summary = {"params": params.to_dict(), "sample_mean": float(np.mean(arr)),
               "sample_variance": float(np.var(arr))}
    try:
        mean, var = sv.stationary_moments(params)
        summary.update(stationary_mean=mean, stationary_variance=var)
    except ComputationError as exc:
        summary["stationary_error"] = str(exc)
    rep.summary.update(summary)
    return rep


def varrv_report(params: sv.SVParams, horizons, paths=0, dt=0.1, seed=0,
                 reduced_grid=None, config=None) -> Report:
    """Theory curve, reduced curve and (when ``paths`` > 0) a Monte Carlo curve."""
    rep = Report("varrv", config or {})
    rows = []
    theory = sv.theory_curve(params, horizons)
    rows += theory.rows()
    if paths:
        rows += sv.mc_var_rv(params, horizons, paths, dt, seed).rows()
    rep.add_table("curve", ("T", "value", "kind"), rows)
    if reduced_grid is None:
        reduced_grid = np.logspace(-2, 2, 41)
    red = sv.reduced_curve(reduced_grid)
    rep.add_table("reduced", ("gammaT", "value", "kind"), red.rows())
    rep.summary.update(params=params.to_dict(),
                       reduced_endpoints=[red.values[0], red.values[-1]],
                       limit_small=1.0, limit_large=2.0 / red.horizons[-1])
    return rep


# -- named reports -----------------------------------------------------------

def _indices(vix, vxo):
    out = []
    if vix is not None:
        out.append(("VIX", vix))
    if vxo is not None:
        out.append(("VXO", vxo))
    if not out:
        raise InputError("named report needs at least one of the VIX or VXO series")
    return out


def table1(prices, vix=None, vxo=None, n=21, config=None) -> Report:
    rep = Report("table1", config or {})
    rows = [(k, "theory", name, r, None) for k, _ in _indices(vix, vxo)
            for name, r in THEORY_RATIOS.items()]
    for kind, index in _indices(vix, vxo):
        for label, period in PERIODS.items():
            try:
                rv2, idx2 = pair(prices, index, n, "concurrent", period)
                rep_ = mean_ratio(idx2, rv2)
                rows.append((kind, "period", label, rep_.ratio, rep_.count))
            except (InputError, ComputationError) as exc:
                rows.append((kind, "period", label, None, f"{type(exc).__name__}"))
    rep.add_table("table1", ("index", "row", "label", "ratio", "count"), rows)
    return rep


def table2(prices, vix=None, vxo=None, n=21, config=None) -> Report:
    rep = Report("table2", config or {})
    rows = []
    for kind, index in _indices(vix, vxo):
        for label, period in PERIODS.items():
            try:
                rv2, idx2 = pair(prices, index, n, "concurrent", period)
                ratio = mean_ratio(idx2, rv2).ratio
                ks = ks_two_sample(rv2.values * ratio, idx2.values)
                rows.append((kind, label, ks, ratio, len(rv2)))
            except (InputError, ComputationError) as exc:
                rows.append((kind, label, None, None, f"{type(exc).__name__}"))
    rep.add_table("table2", ("index", "period", "ks", "ratio", "pairs"), rows)
    return rep


def ratio_fits(prices, vix=None, vxo=None, n=21, alignment="concurrent",
               families=CORE_FAMILIES, periods=None, config=None, name=None) -> Report:
    rep = Report(name or f"ratio-{alignment}", config or {})
    rows = []
    best = {}
    for kind, index in _indices(vix, vxo):
        for label, period in (periods or PERIODS).items():
            try:
                rv2, idx2 = pair(prices, index, n, alignment, period)
            except (InputError, ComputationError) as exc:
                rows.append((f"{kind} {label}", None, None, None, None, None, None, None,
                             f"skipped: {type(exc).__name__}"))
                continue
            for direction, raw in ((f"RV2/{kind}2", rv2.values / idx2.values),
                                   (f"{kind}2/RV2", idx2.values / rv2.values)):
                sample = f"{direction} {label}"
                try:
                    ranking = rank_families(normalize_by_mean(raw), families)
                except ComputationError as exc:
                    rows.append((sample, None, None, None, None, None, None, None,
                                 f"skipped: {type(exc).__name__}"))
                    continue
                rows += _fit_rows(sample, ranking)
                best[sample] = ranking.best.family.value
    rep.add_table("fits", FIT_COLUMNS, rows)
    rep.summary["best"] = best
    return rep


def fig2_slope(prices, n_values=range(1, 22), fit_n=(), families=(), period=None,
               config=None) -> Report:
    """Variance of n-day mean squared returns against n with its log-log slope;
    optionally KS of family fits to the n-day samples in ``fit_n``."""
    returns = log_returns(_restrict(prices, period))
    scaling = variance_vs_n(returns, n_values)
    rep = Report("fig2-slope", config or {})
    rep.add_table("variance", ("n", "variance", "windows"),
                  zip(scaling.n_values, scaling.variances, scaling.counts))
    rep.summary.update(slope=scaling.slope, intercept=scaling.intercept)
    if fit_n and families:
        rows = []
        for n in fit_n:
            x = mean_squared_return_samples(returns, n)
            for fam in families:
                try:
                    r = fit_mle(x, fam)
                    rows.append((n, r.family.value, list(r.params), r.ks, ";".join(r.flags)))
                except ComputationError as exc:
                    rows.append((n, Family(fam).value, None, None, f"skipped: {type(exc).__name__}"))
        rep.add_table("ks", ("n", "family", "params", "ks", "flags"), rows)
    return rep


def default_horizons(length: int, max_h: int | None = None) -> list[int]:
    """Log-spaced integer horizons leaving at least 10 windows."""
    top = max(1, length // 10) if max_h is None else max_h
    h = np.unique(np.round(np.logspace(0, math.log10(max(top, 1)), 40)).astype(int))
    return [int(v) for v in h]


def fig13(prices, presets=("table6-heston", "table6-mult", "table7-heston", "table7-mult"),
          horizons=None, split=None, period=None, config=None) -> Report:
    returns = log_returns(_restrict(prices, period))
    horizons = horizons or default_horizons(len(returns))
    emp = sv.empirical_var_rv(returns, horizons)
    rep = Report("fig13", config or {})
    rows = list(emp.rows())
    for key in presets:
        p = sv.PRESETS[key]
        curve = sv.theory_curve(p, emp.horizons)
        rows += [(t, v, f"{curve.kind}:{key}") for t, v, _ in curve.rows()]
    rep.add_table("curve", ("T", "value", "kind"), rows)
    if split is None:
        split = 1.0 / sv.PRESETS[presets[0]].gamma if presets else 21.0
    try:
        lo, hi = sv.branch_slopes(emp, split)
        rep.summary.update(slope_small=lo, slope_large=hi)
    except ComputationError as exc:
        rep.summary["slope_error"] = str(exc)
    rep.summary["split"] = split
    return rep


def fig14(prices, gamma=0.041, horizons=None, split=None, period=None, config=None) -> Report:
    returns = log_returns(_restrict(prices, period))
    horizons = horizons or default_horizons(len(returns))
    emp = sv.empirical_var_rv(returns, horizons, normalize=True)
    red = sv.reduced_curve([gamma * h for h in emp.horizons])
    rep = Report("fig14", config or {})
    rows = [(gamma * t, v, "Empirical") for t, v, _ in emp.rows()] + red.rows()
    rep.add_table("curve", ("gammaT", "value", "kind"), rows)
    split = (1.0 / gamma) if split is None else split
    try:
        lo, hi = sv.branch_slopes(emp, split)
        rep.summary.update(slope_small=lo, slope_large=hi)
    except ComputationError as exc:
        rep.summary["slope_error"] = str(exc)
    rep.summary.update(gamma=gamma, split=split)
    return rep


COMPOSITE_FIG2 = (Family.NORMAL,) + COMPOSITE_FAMILIES
