"""
Candidate distribution families and their maximum-likelihood estimators.

Parameter conventions (as printed in fit tables):

    Normal(mu, sigma)               LogNormal(mu, sigma) of log x
    Gamma(shape k, scale s)         mean k*s
    InverseGamma(shape a, scale b)  mean b/(a-1)
    Weibull(scale lam, shape k)
    InverseGaussian(mean mu, shape lam)

Normal, LogNormal and InverseGaussian have closed-form estimators. Gamma and
Weibull reduce to a one-dimensional profile-likelihood equation solved by
safeguarded Newton iteration; InverseGamma is fitted as Gamma on 1/x, which
makes the two fits exact mirror images of each other.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special, stats

from ..errors import DegenerateSample, NonConvergence, SupportViolation, TooShort

MIN_SAMPLE = 10
MAX_ITER = 500
GRAD_TOL = 1e-8


class Family(str, enum.Enum):
    NORMAL = "Normal"
    LOGNORMAL = "LogNormal"
    INVERSE_GAMMA = "InverseGamma"
    GAMMA = "Gamma"
    WEIBULL = "Weibull"
    INVERSE_GAUSSIAN = "InverseGaussian"
    EXGAUSSIAN = "ExGaussian"
    GAMMA_PRODUCT = "GammaProduct"
    INVERSE_GAMMA_PRODUCT = "InverseGammaProduct"


CORE_FAMILIES = (
    Family.NORMAL,
    Family.LOGNORMAL,
    Family.INVERSE_GAMMA,
    Family.GAMMA,
    Family.WEIBULL,
    Family.INVERSE_GAUSSIAN,
)

COMPOSITE_FAMILIES = (Family.EXGAUSSIAN, Family.GAMMA_PRODUCT, Family.INVERSE_GAMMA_PRODUCT)

SHORT_NAMES = {
    Family.NORMAL: "N",
    Family.LOGNORMAL: "LN",
    Family.INVERSE_GAMMA: "IGa",
    Family.GAMMA: "Gamma",
    Family.WEIBULL: "Weibull",
    Family.INVERSE_GAUSSIAN: "IG",
    Family.EXGAUSSIAN: "ExGa",
    Family.GAMMA_PRODUCT: "Ga PD",
    Family.INVERSE_GAMMA_PRODUCT: "IGa PD",
}


def check_sample(x, positive: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < MIN_SAMPLE:
        raise TooShort(f"fitting needs at least {MIN_SAMPLE} points, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise SupportViolation("sample contains non-finite values")
    if positive and np.any(x <= 0):
        raise SupportViolation("family requires strictly positive data")
    if np.all(x == x[0]):
        raise DegenerateSample("sample has zero variance")
    return x


def _newton_root(h, dh, x0, lo=0.0, hi=math.inf):
    """Root of a monotone function on (lo, hi) by Newton with bisection fallback.

    Returns (root, iterations). The bracket is tightened on every step so the
    iteration cannot leave the admissible region.
    """
    x = x0
    for it in range(1, MAX_ITER + 1):
        fx = h(x)
        if fx == 0.0:
            return x, it
        slope = dh(x)
        # Keep a bracket [lo, hi] with sign(h(lo)) != sign(h(hi)).
        if (fx > 0) == (slope > 0):
            hi = x
        else:
            lo = x
        step = fx / slope if slope != 0 else math.inf
        new = x - step
        if not (lo < new < hi) or not math.isfinite(new):
            new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * x
        if abs(new - x) <= 1e-15 * abs(x) or (hi - lo) <= 1e-15 * abs(x):
            return new, it
        x = new
    raise NonConvergence(MAX_ITER, abs(h(x)))


class CoreFamily:
    """A two-parameter family with MLE, score and scipy-backed pdf/cdf."""

    family: Family
    param_names: tuple[str, ...]
    positive_support = True

    def dist(self, params):
        raise NotImplementedError

    def in_domain(self, params) -> bool:
        return all(np.isfinite(params)) and all(p > 0 for p in params[1:])

    def logpdf(self, x, params):
        return self.dist(params).logpdf(x)

    def pdf(self, x, params):
        return self.dist(params).pdf(x)

    def cdf(self, x, params):
        return self.dist(params).cdf(x)

    def rvs(self, params, size, rng):
        return self.dist(params).rvs(size=size, random_state=rng)

    def loglik(self, x, params) -> float:
        return float(np.sum(self.logpdf(x, params)))

    def score(self, x, params) -> np.ndarray:
        """Gradient of the mean log-likelihood with respect to ``params``."""
        raise NotImplementedError

    def estimate(self, x) -> tuple[tuple[float, ...], int]:
        """MLE on a validated sample; returns (params, iterations)."""
        raise NotImplementedError

    def fit(self, x) -> tuple[float, ...]:
        x = check_sample(x, self.positive_support)
        params, iterations = self.estimate(x)
        # Relative gradient (g_i * theta_i) is unit-free.
        g = self.score(x, params) * np.abs(np.asarray(params))
        gnorm = float(np.linalg.norm(g))
        if not gnorm < GRAD_TOL:
            raise NonConvergence(iterations, gnorm, f"fitting {self.family.value}")
        return params


class Normal(CoreFamily):
    family = Family.NORMAL
    param_names = ("mu", "sigma")
    positive_support = False

    def dist(self, params):
        mu, sigma = params
        return stats.norm(loc=mu, scale=sigma)

    def score(self, x, params):
        mu, sigma = params
        d = x - mu
        return np.array([np.mean(d) / sigma**2, -1 / sigma + np.mean(d * d) / sigma**3])

    def estimate(self, x):
        mu = float(np.mean(x))
        return (mu, float(np.sqrt(np.mean((x - mu) ** 2)))), 0


class LogNormal(CoreFamily):
    family = Family.LOGNORMAL
    param_names = ("mu", "sigma")

    def dist(self, params):
        mu, sigma = params
        return stats.lognorm(s=sigma, scale=math.exp(mu))

    def score(self, x, params):
        return Normal().score(np.log(x), params)

    def estimate(self, x):
        return Normal().estimate(np.log(x))


class Gamma(CoreFamily):
    family = Family.GAMMA
    param_names = ("shape", "scale")

    def dist(self, params):
        k, s = params
        return stats.gamma(a=k, scale=s)

    def in_domain(self, params):
        return all(np.isfinite(params)) and all(p > 0 for p in params)

    def score(self, x, params):
        k, s = params
        return np.array([
            -special.digamma(k) - math.log(s) + np.mean(np.log(x)),
            -k / s + np.mean(x) / s**2,
        ])

    def estimate(self, x):
        mean = float(np.mean(x))
        # ln k - digamma(k) = ln(mean) - mean(ln x) =: c  (c > 0 by Jensen)
        c = math.log(mean) - float(np.mean(np.log(x)))
        if not c > 0:
            raise DegenerateSample("sample too concentrated for a gamma fit")
        k0 = (3 - c + math.sqrt((c - 3) ** 2 + 24 * c)) / (12 * c)
        k, it = _newton_root(
            lambda k: math.log(k) - special.digamma(k) - c,
            lambda k: 1 / k - special.polygamma(1, k),
            k0,
        )
        return (k, mean / k), it


class InverseGamma(CoreFamily):
    family = Family.INVERSE_GAMMA
    param_names = ("shape", "scale")

    def dist(self, params):
        a, b = params
        return stats.invgamma(a=a, scale=b)

    def in_domain(self, params):
        return all(np.isfinite(params)) and all(p > 0 for p in params)

    def score(self, x, params):
        a, b = params
        return np.array([
            math.log(b) - special.digamma(a) - np.mean(np.log(x)),
            a / b - np.mean(1 / x),
        ])

    def estimate(self, x):
        (k, s), it = Gamma().estimate(1.0 / x)
        return (k, 1.0 / s), it


class Weibull(CoreFamily):
    family = Family.WEIBULL
    param_names = ("scale", "shape")

    def dist(self, params):
        lam, k = params
        return stats.weibull_min(c=k, scale=lam)

    def in_domain(self, params):
        return all(np.isfinite(params)) and all(p > 0 for p in params)

    def score(self, x, params):
        lam, k = params
        u = x / lam
        uk = u**k
        return np.array([
            (k / lam) * (np.mean(uk) - 1),
            1 / k + np.mean(np.log(u)) - np.mean(uk * np.log(u)),
        ])

    def estimate(self, x):
        logx = np.log(x)
        centre = float(np.mean(logx))
        z = logx - centre

        def weights(k):
            w = np.exp(k * z - special.logsumexp(k * z))
            return w

        def h(k):  # profile score in k, increasing
            return float(np.dot(weights(k), z)) - 1 / k

        def dh(k):
            w = weights(k)
            m = np.dot(w, z)
            return float(np.dot(w, (z - m) ** 2)) + 1 / k**2

        k, it = _newton_root(h, dh, 1.2 / float(np.std(z)))
        lam = math.exp(centre + (special.logsumexp(k * z) - math.log(z.size)) / k)
        return (lam, k), it


class InverseGaussian(CoreFamily):
    family = Family.INVERSE_GAUSSIAN
    param_names = ("mean", "shape")

    def dist(self, params):
        mu, lam = params
        return stats.invgauss(mu=mu / lam, scale=lam)

    def in_domain(self, params):
        return all(np.isfinite(params)) and all(p > 0 for p in params)

    def score(self, x, params):
        mu, lam = params
        return np.array([
            lam * np.mean(x - mu) / mu**3,
            1 / (2 * lam) - np.mean((x - mu) ** 2 / (2 * mu**2 * x)),
        ])

    def estimate(self, x):
        mu = float(np.mean(x))
        inv = float(np.mean(1 / x - 1 / mu))
        if not inv > 0:
            raise DegenerateSample("sample too concentrated for an inverse Gaussian fit")
        return (mu, 1 / inv), 0


CORE = {f.family: f for f in (Normal(), LogNormal(), Gamma(), InverseGamma(), Weibull(),
                              InverseGaussian())}
