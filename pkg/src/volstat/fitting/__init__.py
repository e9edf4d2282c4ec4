"""
Maximum-likelihood fitting, Kolmogorov-Smirnov statistics and ranking of
candidate families on a single sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import AllFitsFailed, ComputationError, SupportViolation
from . import ks as _ks
from .composite import COMPOSITE, pdf_composite
from .families import (
    COMPOSITE_FAMILIES,
    CORE,
    CORE_FAMILIES,
    SHORT_NAMES,
    Family,
    check_sample,
)
from .composite import fit_composite
from .ks import ks_two_sample

__all__ = [
    "Family", "FitResult", "FitRanking", "CORE_FAMILIES", "COMPOSITE_FAMILIES",
    "family_model", "fit_mle", "ks_one_sample", "ks_two_sample", "pdf_composite",
    "rank_families", "normalize_by_mean",
]


def family_model(family):
    family = Family(family)
    return CORE.get(family) or COMPOSITE[family]


@dataclass(frozen=True)
class FitResult:
    family: Family
    params: tuple[float, ...]
    log_likelihood: float
    ks: float
    n: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.ks <= 1.0:
            raise ValueError(f"KS statistic {self.ks} outside [0, 1]")
        if self.n < 2:
            raise ValueError("a fit needs at least two observations")

    @property
    def label(self) -> str:
        inner = ", ".join(f"{p:.4f}" for p in self.params)
        return f"{SHORT_NAMES[self.family]}({inner})"

    def to_dict(self) -> dict:
        d = {
            "family": self.family.value,
            "params": [float(p) for p in self.params],
            "ks": float(self.ks),
            "loglik": float(self.log_likelihood),
            "n": int(self.n),
        }
        if self.flags:
            d["flags"] = list(self.flags)
        return d


@dataclass(frozen=True)
class FitRanking:
    """Fits on one sample, best (lowest KS) first; ``skipped`` lists
    (family, reason) for families that could not be fitted."""

    results: tuple[FitResult, ...]
    skipped: tuple[tuple[Family, str], ...] = field(default=())

    @property
    def best(self) -> FitResult:
        return self.results[0]

    def get(self, family) -> FitResult:
        """Fit for ``family``; KeyError if it was skipped or not requested."""
        family = Family(family)
        for r in self.results:
            if r.family is family:
                return r
        raise KeyError(family.value)

    def table(self) -> str:
        """Rows in ``type & parameters & KS Statistic`` layout."""
        lines = ["type & parameters & KS Statistic"]
        for r in self.results:
            lines.append(f"{r.family.value} & {r.label} & {r.ks:.4f}")
        for fam, reason in self.skipped:
            lines.append(f"{fam.value} & (skipped: {reason}) & -")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "results": [r.to_dict() for r in self.results],
            "skipped": [{"family": f.value, "reason": why} for f, why in self.skipped],
        }


def normalize_by_mean(sample) -> np.ndarray:
    """Divide a sample by its arithmetic mean (ratio samples are fitted this way)."""
    x = np.asarray(sample, dtype=float)
    return x / np.mean(x)


def ks_one_sample(sample, family, params) -> float:
    model = family_model(family)
    x = np.asarray(sample, dtype=float)
    if not model.in_domain(tuple(params)):
        raise ValueError(f"parameters {tuple(params)} outside the {Family(family).value} domain")
    if model.positive_support and np.any(x <= 0):
        raise SupportViolation(f"{Family(family).value} requires strictly positive data")
    return _ks.ks_one_sample(x, lambda v: model.cdf(v, tuple(params)))


def fit_mle(sample, family) -> FitResult:
    """Maximum-likelihood fit of ``family`` with its KS statistic."""
    family = Family(family)
    model = family_model(family)
    x = check_sample(sample, model.positive_support)
    flags: tuple[str, ...] = ()
    if family in CORE:
        params = tuple(float(p) for p in model.fit(x))
    else:
        params, flags = fit_composite(x, family)
    loglik = float(np.sum(model.logpdf(x, params)))
    ks = ks_one_sample(x, family, params)
    return FitResult(family, params, loglik, ks, int(x.size), flags)


def rank_families(sample, families=CORE_FAMILIES) -> FitRanking:
    """Fit every family, rank by KS ascending (ties: higher log-likelihood)."""
    results, skipped = [], []
    for fam in families:
        fam = Family(fam)
        try:
            results.append(fit_mle(sample, fam))
        except (ComputationError, ValueError) as exc:
            skipped.append((fam, f"{type(exc).__name__}: {exc}"))
    if not results:
        reasons = "; ".join(f"{f.value}: {r}" for f, r in skipped)
        raise AllFitsFailed(f"no family could be fitted ({reasons})")
    results.sort(key=lambda r: (r.ks, -r.log_likelihood))
    return FitRanking(tuple(results), tuple(skipped))
