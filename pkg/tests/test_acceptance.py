"""
Acceptance checks, one test per criterion (some split by model/index).

Each test prints a single ``ACCEPTANCE <id> PASS|FAIL`` line with the measured
numbers, then asserts at the stated tolerance. Data checks need the historic
CSVs (sp500.csv, vix.csv, vxo.csv with Date and Close columns) in
tests/fixtures/data or $VOLSTAT_DATA_DIR; without them they fail and say so.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import bs_chain, historic_path, synthetic_market, write_csv
from volstat import reports
from volstat import svmodels as sv
from volstat.cli import main
from volstat.fitting import (CORE_FAMILIES, Family, family_model, fit_mle, ks_one_sample, ks_two_sample,
                             normalize_by_mean, rank_families)
from volstat.implied import format_chain_text, implied_variance
from volstat.marketdata import PERIODS, IndexKind, parse_index_csv, parse_price_csv
from volstat.realized import log_returns, mean_ratio, variance_vs_n


def verdict(crit, ok, detail, capsys):
    with capsys.disabled():
        print(f"\nACCEPTANCE {crit} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


# -- historic data ------------------------------------------------------------

def _load(name):
    path = historic_path(name)
    if path is None:
        return None
    text = path.read_text(encoding="utf-8-sig")
    if name == "sp500":
        return parse_price_csv(text)
    return parse_index_csv(text, IndexKind.VIX if name == "vix" else IndexKind.VXO)


@pytest.fixture(scope="module")
def historic():
    data = {k: _load(k) for k in ("sp500", "vix", "vxo")}
    missing = [f"{k}.csv" for k, v in data.items() if v is None]
    return data, missing


def need(historic, crit, capsys, *names):
    data, missing = historic
    absent = [m for m in missing if m[:-4] in names]
    if absent:
        verdict(crit, False, "historic fixture(s) not found: " + ", ".join(absent)
                + " (looked in tests/fixtures/data and $VOLSTAT_DATA_DIR)", capsys)
    return data


def paired(data, index, period):
    return reports.pair(data["sp500"], data[index], 21, "concurrent", PERIODS[period])


def test_1_mean_ratio(historic, capsys):
    data = need(historic, 1, capsys, "sp500", "vix", "vxo")
    t0 = time.perf_counter()
    rv2, ix2 = paired(data, "vix", "1990-2016")
    vix = mean_ratio(ix2, rv2).ratio
    rv2, ix2 = paired(data, "vxo", "1990-2003")
    vxo = mean_ratio(ix2, rv2).ratio
    dt = time.perf_counter() - t0
    ok = abs(vix - 1.4911) <= 0.02 and abs(vxo - 1.8372) <= 0.03 and dt < 5
    verdict(1, ok, f"VIX2/RV2 1990-2016 = {vix:.4f} (1.4911 +-0.02), "
                   f"VXO2/RV2 1990-2003 = {vxo:.4f} (1.8372 +-0.03), {dt:.2f}s", capsys)


def test_2_two_sample_ks(historic, capsys):
    data = need(historic, 2, capsys, "sp500", "vix", "vxo")
    t0 = time.perf_counter()
    out = {}
    for index, period in (("vix", "1990-2016"), ("vxo", "1990-2003")):
        rv2, ix2 = paired(data, index, period)
        ratio = mean_ratio(ix2, rv2).ratio
        out[index] = ks_two_sample(rv2.values * ratio, ix2.values)
    dt = time.perf_counter() - t0
    ok = abs(out["vix"] - 0.1723) <= 0.01 and abs(out["vxo"] - 0.1589) <= 0.01 and dt < 5
    verdict(2, ok, f"KS vs VIX2 = {out['vix']:.4f} (0.1723 +-0.01), "
                   f"vs VXO2 = {out['vxo']:.4f} (0.1589 +-0.01), {dt:.2f}s", capsys)


def _ratio_fits(data, alignment):
    rv2, ix2 = reports.pair(data["sp500"], data["vix"], 21, alignment, PERIODS["1990-2016"])
    a = rank_families(normalize_by_mean(rv2.values / ix2.values))
    b = rank_families(normalize_by_mean(ix2.values / rv2.values))
    return a, b


def test_3_concurrent_fits(historic, capsys):
    data = need(historic, 3, capsys, "sp500", "vix")
    t0 = time.perf_counter()
    fwd, inv = _ratio_fits(data, "concurrent")
    dt = time.perf_counter() - t0
    ig = fwd.get(Family.INVERSE_GAMMA)
    ln_a, ln_b = fwd.get(Family.LOGNORMAL), inv.get(Family.LOGNORMAL)
    p_ok = all(abs(p / q - 1) <= 0.03 for p, q in zip(ig.params, (3.3595, 2.3466)))
    ok = (p_ok and abs(ig.ks - 0.0246) <= 0.005
          and abs(ln_a.params[1] - ln_b.params[1]) <= 1e-9 and dt < 30)
    verdict(3, ok, f"InverseGamma{tuple(round(p, 4) for p in ig.params)} ks {ig.ks:.4f}; "
                   f"LogNormal sigma {ln_a.params[1]:.10f} / {ln_b.params[1]:.10f}; {dt:.2f}s", capsys)


def test_4_preceding_fits(historic, capsys):
    data = need(historic, 4, capsys, "sp500", "vix")
    t0 = time.perf_counter()
    fwd, _ = _ratio_fits(data, "preceding")
    dt = time.perf_counter() - t0
    best = fwd.best
    ok = (best.family is Family.LOGNORMAL and abs(best.ks - 0.0147) <= 0.005
          and fwd.results[0].family not in (Family.INVERSE_GAMMA, Family.GAMMA) and dt < 30)
    verdict(4, ok, f"best {best.family.value} ks {best.ks:.4f} (LogNormal, 0.0147 +-0.005), {dt:.2f}s",
            capsys)


def test_5_fig2_slope(historic, capsys):
    data = need(historic, 5, capsys, "sp500")
    prices = data["sp500"]
    lo, hi = PERIODS["1990-2016"]
    r = log_returns(prices)
    keep = (r.dates >= np.datetime64(lo)) & (r.dates <= np.datetime64(hi))
    slope = variance_vs_n(r.values[keep], range(1, 22)).slope
    verdict(5, abs(slope + 0.9635) <= 0.05, f"slope {slope:.4f} (-0.9635 +-0.05)", capsys)


# -- synthetic ----------------------------------------------------------------

RECOVERY = {
    Family.NORMAL: (5.0, 2.0),
    Family.LOGNORMAL: (-0.2, 0.59),
    Family.INVERSE_GAMMA: (3.36, 2.35),
    Family.GAMMA: (3.36, 0.30),
    Family.WEIBULL: (1.11, 1.4),
    Family.INVERSE_GAUSSIAN: (1.0, 2.3),
}


def test_6_mle_recovery(capsys):
    t0 = time.perf_counter()
    worst_err, worst_ks, notes = 0.0, 0.0, []
    for fam in CORE_FAMILIES:
        truth = RECOVERY[fam]
        x = family_model(fam).rvs(truth, 100_000, np.random.default_rng(0))
        fit = fit_mle(x, fam)
        err = max(abs(p / q - 1) for p, q in zip(fit.params, truth))
        worst_err, worst_ks = max(worst_err, err), max(worst_ks, fit.ks)
        notes.append(f"{fam.value} {err:.4f}/{fit.ks:.4f}")
    dt = time.perf_counter() - t0
    ok = worst_err < 0.01 and worst_ks < 0.01 and dt < 60
    verdict(6, ok, f"max rel err {worst_err:.4f}, max ks {worst_ks:.4f}, {dt:.1f}s; "
                   + ", ".join(notes), capsys)


def brute_one(x, cdf_values):
    """Double loop over sample points: ECDF just below and at each point."""
    x = np.asarray(x)
    below = (x[None, :] < x[:, None]).sum(axis=1) / x.size
    at = (x[None, :] <= x[:, None]).sum(axis=1) / x.size
    return float(max(np.max(np.abs(at - cdf_values)), np.max(np.abs(cdf_values - below))))


def brute_two(a, b):
    t = np.concatenate([a, b])
    fa = (a[None, :] <= t[:, None]).sum(axis=1) / a.size
    fb = (b[None, :] <= t[:, None]).sum(axis=1) / b.size
    return float(np.max(np.abs(fa - fb)))


def test_7_ks_oracle(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n, m = rng.integers(1, 501, size=2)
        # rounding produces ties in about half of the samples
        a = rng.gamma(2.0, 1.0, n)
        b = rng.gamma(2.2, 0.9, m)
        if rng.random() < 0.5:
            a, b = np.round(a, 1) + 0.05, np.round(b, 1) + 0.05
        d1 = ks_one_sample(a, Family.GAMMA, (2.0, 1.0))
        worst = max(worst, abs(d1 - brute_one(a, stats.gamma(2.0, scale=1.0).cdf(a))))
        worst = max(worst, abs(ks_two_sample(a, b) - brute_two(a, b)))
    verdict(7, worst <= 1e-12, f"max |fast - brute| = {worst:.2e} over 200 samples", capsys)


def test_8_implied_variance(capsys):
    chain = bs_chain(sigma=0.2, n=40, width=5.0)
    vol = implied_variance(chain).volatility
    worst = 0.0
    base = implied_variance(chain).variance
    for c in np.geomspace(1e-3, 1e3, 13):
        worst = max(worst, abs(implied_variance(chain.scaled(c)).variance / base - 1))
    ok = abs(vol / 20 - 1) <= 0.03 and worst <= 1e-10
    verdict(8, ok, f"vol {vol:.4f} (20 +-3%), scaling invariance rel err {worst:.1e}", capsys)


def sde_moments(params):
    path = sv.simulate(params, params.theta, 0.1, 1_000_000, seed=0)
    mean_t, var_t = sv.stationary_moments(params)
    daily = path.sampled(1.0)
    max_lag = int(math.ceil(3 / params.gamma))
    acov = sv.empirical_autocovariance(daily, max_lag)
    rate = sv.fit_decay(acov[1:], np.arange(1, max_lag + 1)).rate
    return (np.mean(path.values) / mean_t - 1, np.var(path.values) / var_t - 1,
            rate / params.gamma - 1)


@pytest.mark.parametrize("preset", ["table6-heston", "table6-mult"])
def test_9_sde_moments(preset, capsys):
    t0 = time.perf_counter()
    dm, dv, dg = sde_moments(sv.PRESETS[preset])
    dt = time.perf_counter() - t0
    ok = abs(dm) <= 0.02 and abs(dv) <= 0.05 and abs(dg) <= 0.10 and dt < 60
    verdict(f"9[{preset}]", ok, f"mean {dm:+.2%} (2%), variance {dv:+.2%} (5%), "
                                 f"decay rate {dg:+.2%} (10%), {dt:.1f}s", capsys)


def test_10_identity_and_limits(capsys):
    worst = 0.0
    for params in (sv.PRESETS["table6-heston"], sv.PRESETS["table6-mult"]):
        var = sv.stationary_moments(params)[1]
        for gt in 10.0 ** np.arange(-3, 4):
            worst = max(worst, abs(sv.var_rv_theory(params, gt / params.gamma) / var
                                   / sv.var_rv_reduced(gt) - 1))
    small = sv.var_rv_reduced(1e-6)
    large = sv.var_rv_reduced(1e3) / (2 / 1e3)
    ok = worst <= 1e-12 and abs(small - 1) <= 2e-3 and abs(large - 1) <= 2e-3
    verdict("10[identity]", ok, f"identity rel err {worst:.1e}; R(1e-6) = {small:.8f} (1), "
                                f"R(1e3) * 1e3/2 = {large:.5f} (1)", capsys)


@pytest.mark.parametrize("preset", ["table6-heston", "table6-mult"])
def test_10_monte_carlo(preset, capsys):
    params = sv.PRESETS[preset]
    horizons = [5.0, 21.0, 63.0]
    curve = sv.mc_var_rv(params, horizons, n_paths=10_000, dt=0.1, seed=0)
    errs = [v / sv.var_rv_theory(params, T) - 1 for T, v in zip(horizons, curve.values)]
    ok = all(abs(e) <= 0.05 for e in errs)
    verdict(f"10[mc {preset}]", ok, "MC/theory - 1 at T=5,21,63: "
            + ", ".join(f"{e:+.2%}" for e in errs) + " (5%)", capsys)


@pytest.mark.parametrize("preset", ["table6-heston", "table6-mult"])
def test_11_round_trip(preset, capsys):
    params = sv.PRESETS[preset]
    path = sv.simulate(params, params.theta, 0.1, 1_000_000, seed=0)
    est = sv.estimate_params(path.sampled(1.0), params.model)
    errs = {k: getattr(est, k) / getattr(params, k) - 1 for k in ("theta", "gamma", "kappa")}
    ok = all(abs(e) <= 0.10 for e in errs.values())
    verdict(f"11[{preset}]", ok, ", ".join(f"{k} {e:+.2%}" for k, e in errs.items()) + " (10%)",
            capsys)


def test_12_cli_determinism(tmp_path, capsys):
    dates, closes, levels = synthetic_market(seed=5)
    p = write_csv(tmp_path / "sp.csv", dates, closes)
    i = write_csv(tmp_path / "vix.csv", dates, levels)
    c1 = tmp_path / "c1.csv"
    c1.write_text(format_chain_text([bs_chain(days=23), bs_chain(days=37, sigma=0.25)]))
    data = ["--prices", str(p)]
    commands = [
        ["rv", *data],
        ["ratio", *data, "--index", str(i)],
        ["ratio", *data, "--index", str(i), "--invert", "--families", "composite"],
        ["compare", *data, "--index", str(i), "--scaling", "theory_365_252"],
        ["vix", "--chain", str(c1)],
        ["simulate", "--model", "mult", "--steps", "2000", "--paths", "3", "--seed", "4"],
        ["varrv", "--paths", "100", "--dt", "0.5", "--seed", "2"],
    ] + [["report", name, *data, "--vix", str(i)] for name in reports.NAMED_REPORTS]
    bad = []
    for cmd in commands:
        for fmt in ("csv", "json"):
            outs = []
            for k in range(2):
                out = tmp_path / f"o{k}"
                code = main(cmd + ["--format", fmt, "--out", str(out)])
                outs.append((code, out.read_bytes() if code == 0 else None))
            if outs[0][0] != 0 or outs[0] != outs[1]:
                bad.append(f"{' '.join(cmd[:2])} {fmt} (exit {outs[0][0]})")
    verdict(12, not bad, f"{2 * len(commands)} command/format pairs re-run"
                         + (": differing " + "; ".join(bad) if bad else ", all byte-identical"), capsys)
