"""
Composite families used for n-day mean squared returns.

ExGaussian(mu, sigma, tau)
    Normal(mu, sigma) plus an independent exponential with mean ``tau``
    (rate 1/tau). Closed-form pdf and cdf.

GammaProduct(shape, scale), InverseGammaProduct(shape, scale)
    Law of y = r^2 where r = sqrt(v) * z, z ~ N(0, 1) and the variance v is
    Gamma or InverseGamma distributed. Densities are one-dimensional integrals
    over v, evaluated in the variable s = ln(v / y):

        f(y) = int phi(s) g(y e^s) ds,      phi(s) = exp(s/2 - e^{-s}/2) / sqrt(2 pi)
        F(y) = 1 - int psi(s) G_sf(y e^s) ds, psi(s) = exp(-s/2 - e^{-s}/2) / sqrt(2 pi)

    where g / G_sf are the mixing density / survival function. phi and psi
    vanish doubly-exponentially for s -> -inf, so the lower limit is fixed.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize, special, stats

from ..errors import DegenerateSample, IntegrationFailure, NonConvergence, SupportViolation
from .families import GRAD_TOL, MAX_ITER, Family, check_sample

QUAD_TOL = 1e-9
S_LOWER = -7.0
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _log_phi(s):
    return 0.5 * s - 0.5 * np.exp(-s) - _LOG_SQRT_2PI


def _log_psi(s):
    return -0.5 * s - 0.5 * np.exp(-s) - _LOG_SQRT_2PI


class ExGaussian:
    family = Family.EXGAUSSIAN
    param_names = ("mu", "sigma", "tau")
    positive_support = False

    def in_domain(self, params):
        mu, sigma, tau = params
        return math.isfinite(mu) and sigma > 0 and tau > 0

    def logpdf(self, x, params):
        mu, sigma, tau = params
        x = np.asarray(x, dtype=float)
        a = (x - mu) / sigma
        b = sigma / tau
        z = a - b
        with np.errstate(over="ignore", invalid="ignore"):
            # Left of the mode use the scaled complementary error function so
            # the tau -> 0 limit does not cancel catastrophically.
            left = (-math.log(tau) - 0.5 * a * a
                    + np.log(0.5 * special.erfcx(-z / math.sqrt(2.0))))
            right = -math.log(tau) + 0.5 * b * b - (x - mu) / tau + special.log_ndtr(z)
        return np.where(z < 0, left, right)

    def pdf(self, x, params):
        return np.exp(self.logpdf(x, params))

    def cdf(self, x, params):
        mu, sigma, tau = params
        a = (np.asarray(x, dtype=float) - mu) / sigma
        return np.clip(special.ndtr(a) - tau * self.pdf(x, params), 0.0, 1.0)

    def rvs(self, params, size, rng):
        mu, sigma, tau = params
        return rng.normal(mu, sigma, size) + rng.exponential(tau, size)

    def grad_logpdf(self, x, params):
        """d logpdf / d(mu, sigma, tau), shape (n, 3)."""
        mu, sigma, tau = params
        d = np.asarray(x, dtype=float) - mu
        z = d / sigma - sigma / tau
        mills = np.exp(-0.5 * z * z - _LOG_SQRT_2PI - special.log_ndtr(z))
        return np.column_stack([
            1 / tau - mills / sigma,
            sigma / tau**2 - mills * (d / sigma**2 + 1 / tau),
            -1 / tau - sigma**2 / tau**3 + d / tau**2 + mills * sigma / tau**2,
        ])

    def moment_guess(self, x):
        m = float(np.mean(x))
        sd = float(np.std(x))
        skew = float(stats.skew(x))
        tau = sd * (min(max(skew, 0.05), 1.9) / 2) ** (1 / 3)
        sigma = math.sqrt(max(sd * sd - tau * tau, (0.05 * sd) ** 2))
        return (m - tau, sigma, tau)

    def to_free(self, params):
        mu, sigma, tau = params
        return np.array([mu, math.log(sigma), math.log(tau)])

    def from_free(self, u):
        return (float(u[0]), float(math.exp(u[1])), float(math.exp(u[2])))

    def free_jacobian(self, params):
        return np.array([1.0, params[1], params[2]])

    def mean_loglik_and_grad(self, x, params, _state=None):
        lp = self.logpdf(x, params)
        return float(np.mean(lp)), np.mean(self.grad_logpdf(x, params), axis=0)


class ProductFamily:
    """Squared Gaussian with Gamma / InverseGamma mixing variance."""

    positive_support = True
    param_names = ("shape", "scale")

    def __init__(self, inverse: bool):
        self.inverse = inverse
        self.family = Family.INVERSE_GAMMA_PRODUCT if inverse else Family.GAMMA_PRODUCT

    def in_domain(self, params):
        return all(math.isfinite(p) and p > 0 for p in params)

    def mixing(self, params):
        k, s = params
        return stats.invgamma(a=k, scale=s) if self.inverse else stats.gamma(a=k, scale=s)

    def _log_g(self, v, params):
        k, s = params
        lv = np.log(v)
        if self.inverse:
            return k * math.log(s) - special.gammaln(k) - (k + 1) * lv - s / v
        return (k - 1) * lv - v / s - special.gammaln(k) - k * math.log(s)

    def _dlog_g(self, v, params):
        k, s = params
        lv = np.log(v)
        if self.inverse:
            return math.log(s) - special.digamma(k) - lv, k / s - 1 / v
        return lv - special.digamma(k) - math.log(s), -k / s + v / s**2

    def _upper(self, y_min, params):
        v_hi = float(self.mixing(params).isf(1e-18))
        return max(math.log(v_hi / y_min) + 3.0, S_LOWER + 10.0)

    # -- adaptive quadrature (public evaluation) ----------------------------

    def _adaptive(self, integrand, a, b, epsabs, epsrel):
        res, err, info = integrate.quad_vec(integrand, a, b, epsabs=epsabs, epsrel=epsrel,
                                            norm="max", limit=2000, full_output=True)
        if not info.success or not np.all(np.isfinite(res)):
            raise IntegrationFailure(
                f"quadrature did not reach tolerance (error estimate {err:.2e})")
        return res, err

    def pdf(self, x, params):
        y = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(y <= 0):
            raise SupportViolation("product densities are defined for y > 0")
        b = self._upper(float(y.min()), params)
        # Normalise each component by a coarse estimate so a single relative
        # tolerance applies to every y regardless of its density magnitude.
        coarse = np.exp(self._fixed_logpdf(y, params, S_LOWER, b, panels=64)[0])
        scale = np.where(coarse > 0, coarse, 1.0)

        def integrand(s):
            return np.exp(_log_phi(s) + self._log_g(y * math.exp(s), params)) / scale

        # the tiny absolute floor only matters where the density underflows to 0
        res, _ = self._adaptive(integrand, S_LOWER, b, 1e-300, QUAD_TOL)
        out = res * scale
        return out if np.ndim(x) else float(out[0])

    def logpdf(self, x, params):
        return np.log(self.pdf(x, params))

    def cdf(self, x, params):
        y = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(y)
        pos = y > 0
        if np.any(pos):
            yp = y[pos]
            mix = self.mixing(params)
            b = self._upper(float(yp.min()), params)

            def integrand(s):
                return np.exp(_log_psi(s)) * mix.sf(yp * math.exp(s))

            res, _ = self._adaptive(integrand, S_LOWER, b, QUAD_TOL, 0.0)
            out[pos] = np.clip(1.0 - res, 0.0, 1.0)
        return out if np.ndim(x) else float(out[0])

    def rvs(self, params, size, rng):
        v = self.mixing(params).rvs(size=size, random_state=rng)
        z = rng.standard_normal(size)
        return v * z * z

    # -- fixed Gauss-Legendre rule (smooth objective for optimisation) ------

    def _fixed_logpdf(self, y, params, a, b, panels, with_grad=False, block=1024):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        s = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        base = np.log((half[:, None] * _GL_WEIGHTS[None, :]).ravel()) + _log_phi(s)
        es = np.exp(s)
        logf = np.empty(y.size)
        grad = np.empty((y.size, 2)) if with_grad else None
        for lo in range(0, y.size, block):
            v = y[lo:lo + block, None] * es[None, :]
            terms = base[None, :] + self._log_g(v, params)
            lf = special.logsumexp(terms, axis=1)
            logf[lo:lo + block] = lf
            if with_grad:
                w = np.exp(terms - lf[:, None])
                dk, ds = self._dlog_g(v, params)
                grad[lo:lo + block, 0] = np.sum(w * dk, axis=1)
                grad[lo:lo + block, 1] = np.sum(w * ds, axis=1)
        return logf, grad

    def moment_guess(self, x):
        m1 = float(np.mean(x))
        ratio = float(np.mean(x * x)) / (3.0 * m1 * m1)
        if self.inverse:
            k = (2 * ratio - 1) / (ratio - 1) if ratio > 1.0 + 1e-3 else 100.0
            k = min(max(k, 2.05), 100.0)
            return (k, m1 * (k - 1))
        k = 1.0 / (ratio - 1) if ratio > 1.0 + 1e-3 else 100.0
        k = min(max(k, 0.05), 100.0)
        return (k, m1 / k)

    def to_free(self, params):
        return np.log(np.asarray(params, dtype=float))

    def from_free(self, u):
        return (float(math.exp(u[0])), float(math.exp(u[1])))

    def free_jacobian(self, params):
        return np.asarray(params, dtype=float)

    def mean_loglik_and_grad(self, x, params, state):
        b = self._upper(state["y_min"], params)
        logf, grad = self._fixed_logpdf(x, params, S_LOWER, b, state["panels"], with_grad=True)
        return float(np.mean(logf)), np.mean(grad, axis=0)


EXGAUSSIAN = ExGaussian()
GAMMA_PRODUCT = ProductFamily(inverse=False)
INVERSE_GAMMA_PRODUCT = ProductFamily(inverse=True)
COMPOSITE = {f.family: f for f in (EXGAUSSIAN, GAMMA_PRODUCT, INVERSE_GAMMA_PRODUCT)}


def pdf_composite(family, params, x):
    """Density of a composite family at ``x`` (scalar or array)."""
    fam = COMPOSITE[Family(family)]
    if not fam.in_domain(params):
        raise ValueError(f"parameters {params} outside the {fam.family.value} domain")
    return fam.pdf(x, params)


def fit_composite(x, family) -> tuple[tuple[float, ...], tuple[str, ...]]:
    """MLE for a composite family by BFGS on log-transformed parameters.

    Product-family likelihoods use a fixed composite Gauss-Legendre rule so the
    objective is smooth; the optimum is then checked against adaptive
    quadrature. On non-convergence or a quadrature mismatch the moment-matching
    estimate is returned with the flag ``"moment_matched"``.
    """
    fam = COMPOSITE[Family(family)]
    x = check_sample(x, fam.positive_support)
    guess = fam.moment_guess(x)
    state = None
    if isinstance(fam, ProductFamily):
        span = fam._upper(float(x.min()), guess) - S_LOWER
        state = {"y_min": float(x.min()), "panels": int(max(64, math.ceil(span / 0.2)))}

    def objective(u):
        params = fam.from_free(u)
        with np.errstate(all="ignore"):
            ll, g = fam.mean_loglik_and_grad(x, params, state)
        if not math.isfinite(ll):
            return 1e300, np.zeros_like(u)
        return -ll, -g * fam.free_jacobian(params)

    try:
        res = optimize.minimize(objective, fam.to_free(guess), jac=True, method="BFGS",
                                options={"gtol": GRAD_TOL, "maxiter": MAX_ITER})
        params = fam.from_free(res.x)
        gnorm = float(np.linalg.norm(res.jac))
        # status 2 is "precision loss": the line search cannot improve further.
        if res.status not in (0, 2) or not gnorm < 1e-5:
            raise NonConvergence(int(res.nit), gnorm, f"fitting {fam.family.value}")
        if isinstance(fam, ProductFamily):
            fixed = np.exp(fam._fixed_logpdf(x, params, S_LOWER,
                                             fam._upper(float(x.min()), params),
                                             state["panels"])[0])
            exact = fam.pdf(x, params)
            if np.max(np.abs(fixed / exact - 1.0)) > 1e-6:
                raise IntegrationFailure("fixed-rule likelihood disagrees with adaptive quadrature")
        flags = () if gnorm < GRAD_TOL else ("gradient_tolerance_relaxed",)
        return params, flags
    except (NonConvergence, IntegrationFailure, FloatingPointError):
        if not fam.in_domain(guess):
            raise DegenerateSample(f"no usable estimate for {fam.family.value}")
        return tuple(float(p) for p in guess), ("moment_matched",)
