"""
Mean-reverting stochastic-variance models

    Heston:          dv = -gamma (v - theta) dt + kappa sqrt(v) dW
    multiplicative:  dv = -gamma (v - theta) dt + kappa v dW

their stationary moments and autocovariance, parameter estimation from a daily
variance proxy, Euler-Maruyama simulation, and the variance of the time
average (1/T) int_0^T v dt. Time is measured in trading days.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParams,
    InvalidStep,
    MomentDivergence,
    NonPositiveDecay,
    TooShort,
)
from .realized import ReturnSeries, loglog_slope, mean_squared_return_samples


class Model(str, enum.Enum):
    HESTON = "heston"
    MULTIPLICATIVE = "mult"


@dataclass(frozen=True)
class SVParams:
    theta: float
    gamma: float
    kappa: float
    model: Model = Model.HESTON

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        for name in ("theta", "gamma", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParams(f"{name} must be a finite non-negative number")
        if self.theta <= 0 or self.gamma <= 0:
            raise InvalidParams("theta and gamma must be positive")

    @property
    def feller(self) -> bool:
        """Heston Feller condition 2 gamma theta >= kappa^2 (informational)."""
        return 2 * self.gamma * self.theta >= self.kappa**2

    @property
    def has_second_moment(self) -> bool:
        return self.model is Model.HESTON or 2 * self.gamma > self.kappa**2

    def to_dict(self) -> dict:
        return {"model": self.model.value, "theta": self.theta, "gamma": self.gamma,
                "kappa": self.kappa, "feller": self.feller}


# S&P 500 parameter sets (per trading day).
PRESETS = {
    "table6-heston": SVParams(9.81e-5, 0.041, 2.32e-3, Model.HESTON),
    "table6-mult": SVParams(9.81e-5, 0.041, 0.25, Model.MULTIPLICATIVE),
    "table7-heston": SVParams(1.02e-4, 0.041, 2.80e-3, Model.HESTON),
    "table7-mult": SVParams(1.10e-4, 0.041, 0.25, Model.MULTIPLICATIVE),
}


@dataclass(frozen=True)
class SVPath:
    dt: float
    values: np.ndarray
    seed: int
    path_index: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    def sampled(self, interval: float = 1.0) -> np.ndarray:
        """Values every ``interval`` time units (interval must be a multiple of dt)."""
        step = interval / self.dt
        if abs(step - round(step)) > 1e-9 or round(step) < 1:
            raise InvalidStep("sampling interval must be a positive multiple of dt")
        return self.values[:: int(round(step))]


@dataclass(frozen=True)
class VarRVCurve:
    horizons: tuple[float, ...]
    values: tuple[float, ...]
    kind: str  # TheoryHeston | TheoryMult | Reduced | Empirical

    def __post_init__(self):
        if len(self.horizons) != len(self.values):
            raise ValueError("horizons and values differ in length")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("horizons must be strictly increasing")
        if any(not v >= 0 for v in self.values):
            raise ValueError("curve values must be non-negative")

    def rows(self):
        return [(t, v, self.kind) for t, v in zip(self.horizons, self.values)]


def path_rng(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent generator for one path; depends only on (seed, path_index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path_index,))))


def _check_sim(params, v0, dt, steps):
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidStep(f"time step must be positive, got {dt}")
    if steps < 1 or int(steps) != steps:
        raise InvalidStep(f"steps must be a positive integer, got {steps}")
    if not v0 > 0:
        raise InvalidStep(f"initial variance must be positive, got {v0}")


def _euler_step(params, v, dt, dw):
    drift = v - params.gamma * (v - params.theta) * dt
    if params.model is Model.HESTON:
        # Full truncation: negative excursions feel neither diffusion nor a
        # negative square root, and the state is floored at zero.
        vp = np.maximum(v, 0.0)
        return np.maximum(drift + params.kappa * np.sqrt(vp) * dw, 0.0)
    nxt = drift + params.kappa * v * dw
    return np.abs(nxt)  # reflection guard; v stays positive for small dt


def simulate(params: SVParams, v0: float, dt: float = 0.1, steps: int = 1000,
             seed: int = 0, path_index: int = 0) -> SVPath:
    """One Euler-Maruyama path of ``steps`` steps (``steps + 1`` values)."""
    _check_sim(params, v0, dt, steps)
    steps = int(steps)
    dw = path_rng(seed, path_index).standard_normal(steps) * math.sqrt(dt)
    v = np.empty(steps + 1)
    v[0] = v0
    g, th, k = params.gamma, params.theta, params.kappa
    x = float(v0)
    if params.model is Model.HESTON:
        for i in range(steps):
            xp = x if x > 0.0 else 0.0
            x = x - g * (x - th) * dt + k * math.sqrt(xp) * dw[i]
            if x < 0.0:
                x = 0.0
            v[i + 1] = x
    else:
        for i in range(steps):
            x = abs(x - g * (x - th) * dt + k * x * dw[i])
            v[i + 1] = x
    return SVPath(dt, v, seed, path_index)


def simulate_paths(params: SVParams, v0: float, dt: float, steps: int, n_paths: int,
                   seed: int = 0, block: int = 512) -> np.ndarray:
    """Independent paths as an array of shape (n_paths, steps + 1).

    Path ``j`` uses the stream ``path_rng(seed, j)``, so it is identical to
    ``simulate(params, v0, dt, steps, seed, path_index=j).values``.
    """
    _check_sim(params, v0, dt, steps)
    steps, n_paths = int(steps), int(n_paths)
    rngs = [path_rng(seed, j) for j in range(n_paths)]
    out = np.empty((n_paths, steps + 1))
    out[:, 0] = v0
    v = np.full(n_paths, float(v0))
    sq = math.sqrt(dt)
    for start in range(0, steps, block):
        m = min(block, steps - start)
        dw = np.stack([r.standard_normal(m) for r in rngs]) * sq
        for i in range(m):
            v = _euler_step(params, v, dt, dw[:, i])
            out[:, start + i + 1] = v
    return out


def stationary_moments(params: SVParams) -> tuple[float, float]:
    """Stationary (mean, variance) of v."""
    th, g, k = params.theta, params.gamma, params.kappa
    if params.model is Model.HESTON:
        return th, k * k * th / (2 * g)
    denom = 2 * g - k * k
    if not denom > 0:
        raise MomentDivergence("multiplicative model needs 2*gamma > kappa^2 for a finite variance")
    return th, k * k * th * th / denom


def autocovariance_theory(params: SVParams, tau):
    """E[v_t v_{t+tau}] - theta^2 = stationary variance * exp(-gamma tau)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("lag must be non-negative")
    _, var = stationary_moments(params)
    out = var * np.exp(-params.gamma * tau)
    return float(out) if out.ndim == 0 else out


def reduced_factor(gamma_t):
    """2 (gamma T - 1 + exp(-gamma T)) / (gamma T)^2, stable for small arguments."""
    x = np.asarray(gamma_t, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gamma*T must be positive")
    small = x < 1e-2
    xs = np.where(small, x, 1.0)
    xl = np.where(small, 1.0, x)
    # Taylor series of 2 (x - 1 + e^{-x}) / x^2 = sum_{j>=0} 2 (-x)^j / (j + 2)!
    series = sum(2.0 * (-xs) ** j / math.factorial(j + 2) for j in range(8))
    direct = 2.0 * (xl + np.expm1(-xl)) / (xl * xl)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def var_rv_reduced(gamma_t):
    """Variance of the time-averaged variance divided by the stationary variance."""
    return reduced_factor(gamma_t)


def var_rv_theory(params: SVParams, T):
    """E[((1/T) int_0^T v dt - theta)^2] for a stationary path."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("horizon must be positive")
    _, var = stationary_moments(params)
    out = var * reduced_factor(params.gamma * T)
    return float(out) if np.ndim(out) == 0 else out


def theory_curve(params: SVParams, horizons) -> VarRVCurve:
    kind = "TheoryHeston" if params.model is Model.HESTON else "TheoryMult"
    h = tuple(float(t) for t in horizons)
    return VarRVCurve(h, tuple(float(v) for v in np.atleast_1d(var_rv_theory(params, h))), kind)


def reduced_curve(gamma_t_values) -> VarRVCurve:
    x = tuple(float(v) for v in gamma_t_values)
    return VarRVCurve(x, tuple(float(v) for v in np.atleast_1d(var_rv_reduced(x))), "Reduced")


def empirical_autocovariance(x, max_lag: int) -> np.ndarray:
    """Sample autocovariance at lags 0..max_lag (divisor n, mean removed)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n <= max_lag + 1:
        raise TooShort(f"series of {n} points too short for lag {max_lag}")
    d = x - x.mean()
    return np.array([np.dot(d[: n - k], d[k:]) / n for k in range(max_lag + 1)])


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float  # fitted autocovariance at lag 0
    lags: tuple[int, ...]


def fit_decay(autocov, lags) -> DecayFit:
    """Log-linear fit ln C(lag) = ln A - rate * lag over positive C values."""
    lags = np.asarray(lags, dtype=float)
    c = np.asarray(autocov, dtype=float)
    keep = c > 0
    if keep.sum() < 2:
        raise NonPositiveDecay("fewer than two positive autocovariances to fit")
    slope, icpt = np.polyfit(lags[keep], np.log(c[keep]), 1)
    if not -slope > 0:
        raise NonPositiveDecay(f"autocovariance is not decaying (fitted rate {-slope:.3g})")
    return DecayFit(float(-slope), float(math.exp(icpt)), tuple(int(v) for v in lags[keep]))


def estimate_params(variance_proxy, model: Model | str = Model.HESTON,
                    interval: float = 1.0, max_lag: int | None = None,
                    gamma_guess: float = 0.041) -> SVParams:
    """Estimate (theta, gamma, kappa) from a regularly sampled variance proxy.

    theta is the sample mean; gamma and the stationary variance A come from a
    log-linear fit of the sample autocovariance over lags 1..L (lag 0 is
    excluded so measurement noise in the proxy does not bias A); kappa is
    inverted from A: kappa^2 = 2 gamma A / theta (Heston) or
    2 gamma A / (theta^2 + A) (multiplicative). ``interval`` is the sampling
    step in days; ``max_lag`` defaults to ceil(3 / gamma_guess) days.
    """
    model = Model(model)
    x = np.asarray(getattr(variance_proxy, "values", variance_proxy), dtype=float)
    if x.size < 1000:
        raise TooShort(f"parameter estimation needs >= 1000 observations, got {x.size}")
    theta = float(np.mean(x))
    if max_lag is None:
        max_lag = int(math.ceil(3.0 / gamma_guess / interval))
    acov = empirical_autocovariance(x, max_lag)
    lags = np.arange(1, max_lag + 1)
    fit = fit_decay(acov[1:], lags)
    gamma = fit.rate / interval
    a = fit.intercept
    if model is Model.HESTON:
        kappa2 = 2 * gamma * a / theta
    else:
        kappa2 = 2 * gamma * a / (theta * theta + a)
    params = SVParams(theta, gamma, math.sqrt(kappa2), model)
    if not params.has_second_moment:
        raise MomentDivergence("estimated parameters have no finite stationary variance")
    return params


def daily_variance_proxy(returns: ReturnSeries) -> np.ndarray:
    """Single-day squared log returns (de-annualized n = 1 realized variance)."""
    return np.asarray(returns.values, dtype=float) ** 2


def empirical_var_rv(returns, horizons, normalize: bool = False) -> VarRVCurve:
    """Sample variance (n - 1 divisor) of the n-day mean of squared returns.

    With ``normalize`` each value is divided by the n = 1 variance, for
    comparison with the reduced curve.
    """
    horizons = tuple(int(n) for n in horizons)
    values = []
    for n in horizons:
        samples = mean_squared_return_samples(returns, n)
        if samples.size < 2:
            raise TooShort(f"horizon {n} leaves fewer than two windows")
        values.append(float(np.var(samples, ddof=1)))
    if normalize:
        base = mean_squared_return_samples(returns, 1)
        v1 = float(np.var(base, ddof=1))
        values = [v / v1 for v in values]
    return VarRVCurve(tuple(float(h) for h in horizons), tuple(values), "Empirical")


def branch_slopes(curve: VarRVCurve, split: float) -> tuple[float, float]:
    """Log-log slopes of the curve below and at/above ``split``."""
    h = np.asarray(curve.horizons)
    v = np.asarray(curve.values)
    lo = h < split
    return loglog_slope(h[lo], v[lo])[0], loglog_slope(h[~lo], v[~lo])[0]


def mc_var_rv(params: SVParams, horizons, n_paths: int = 10_000, dt: float = 0.1,
              seed: int = 0, burn_in: float | None = None) -> VarRVCurve:
    """Monte Carlo variance of the path-averaged variance for each horizon.

    Paths start at theta and are run for ``burn_in`` days (default 10/gamma)
    before the averaging window so they sample the stationary law. Time
    averages use the trapezoidal rule on the Euler grid.
    """
    horizons = tuple(float(t) for t in horizons)
    if burn_in is None:
        burn_in = 10.0 / params.gamma
    burn_steps = int(math.ceil(burn_in / dt))
    hor_steps = [int(round(t / dt)) for t in horizons]
    if any(abs(s * dt - t) > 1e-9 * max(t, 1) for s, t in zip(hor_steps, horizons)):
        raise InvalidStep("horizons must be multiples of dt")
    paths = simulate_paths(params, params.theta, dt, burn_steps + max(hor_steps), n_paths, seed)
    values = []
    for s in hor_steps:
        seg = paths[:, burn_steps: burn_steps + s + 1]
        avg = (np.sum(seg, axis=1) - 0.5 * (seg[:, 0] + seg[:, -1])) / s
        values.append(float(np.var(avg, ddof=1)))
    return VarRVCurve(horizons, tuple(values), "Empirical")
