import math
import os
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from volstat.implied import OptionChainSnapshot, OptionQuote, Right

FIXTURE_DATA = Path(__file__).parent / "fixtures" / "data"


def historic_path(name):
    """Location of a historic CSV (sp500/vix/vxo), or None if absent."""
    for base in (os.environ.get("VOLSTAT_DATA_DIR"), FIXTURE_DATA):
        if base and (Path(base) / f"{name}.csv").exists():
            return Path(base) / f"{name}.csv"
    return None


def business_days(start, count):
    d = np.arange(np.datetime64(start), np.datetime64(start) + 2 * count + 10)
    return d[np.is_busday(d)][:count]


def synthetic_market(n_days=2600, seed=1):
    """GARCH-like daily returns plus a noisy forward-looking index.

    Returns (dates, closes, index_levels)."""
    rng = np.random.default_rng(seed)
    dates = business_days("1990-01-02", n_days)
    v = np.empty(n_days)
    r = np.empty(n_days)
    v[0] = 1e-4
    for i in range(n_days):
        if i:
            v[i] = 1e-4 + 0.96 * (v[i - 1] - 1e-4) + 0.03 * (r[i - 1] ** 2 - v[i - 1])
        r[i] = math.sqrt(v[i]) * rng.standard_normal()
    closes = 100.0 * np.exp(np.cumsum(r))
    levels = 100.0 * np.sqrt(252 * v) * 1.2 * np.exp(0.1 * rng.standard_normal(n_days))
    return dates, closes, levels


def write_csv(path, dates, values, header=("Date", "Close")):
    lines = [",".join(header)]
    lines += [f"{d},{float(v)!r}" for d, v in zip(dates, values)]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="session")
def market_files(tmp_path_factory):
    base = tmp_path_factory.mktemp("market")
    dates, closes, levels = synthetic_market()
    prices = write_csv(base / "sp.csv", dates, [float(f"{c:.6f}") for c in closes])
    index = write_csv(base / "vix.csv", dates, [float(f"{x:.4f}") for x in levels])
    return prices, index


def bs_chain(forward=100.0, sigma=0.2, days=30.0, rate=0.0, n=40, width=5.0):
    """Black-Scholes priced chain (bid = ask = model price) with ``n`` evenly
    spaced strikes spanning +-``width`` standard deviations of log(K/F)."""
    T = days / 365.0
    sd = sigma * math.sqrt(T)
    strikes = np.linspace(forward * math.exp(-width * sd), forward * math.exp(width * sd), n)
    df = math.exp(-rate * T)
    quotes = []
    for k in strikes:
        d1 = (math.log(forward / k) + 0.5 * sd * sd) / sd
        d2 = d1 - sd
        call = df * (forward * norm.cdf(d1) - k * norm.cdf(d2))
        put = df * (k * norm.cdf(-d2) - forward * norm.cdf(-d1))
        quotes.append(OptionQuote(float(k), Right.CALL, call, call))
        quotes.append(OptionQuote(float(k), Right.PUT, put, put))
    return OptionChainSnapshot(T, forward, rate, tuple(quotes))
