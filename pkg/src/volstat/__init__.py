"""Realized and implied variance analysis, distribution fitting and
stochastic-variance model checks."""
from . import errors
from .fitting import FitRanking, FitResult, Family, fit_mle, ks_one_sample, ks_two_sample, rank_families
from .implied import OptionChainSnapshot, OptionQuote, implied_variance, blend_terms
from .marketdata import IndexSeries, PriceSeries, align, parse_index_csv, parse_price_csv
from .realized import log_returns, mean_ratio, paired_variance, realized_variance
from .svmodels import SVParams, simulate, stationary_moments, var_rv_reduced, var_rv_theory

__version__ = "0.1.0"

__all__ = [
    "errors", "FitRanking", "FitResult", "Family", "fit_mle", "ks_one_sample",
    "ks_two_sample", "rank_families", "OptionChainSnapshot", "OptionQuote",
    "implied_variance", "blend_terms", "IndexSeries", "PriceSeries", "align",
    "parse_index_csv", "parse_price_csv", "log_returns", "mean_ratio",
    "paired_variance", "realized_variance", "SVParams", "simulate",
    "stationary_moments", "var_rv_reduced", "var_rv_theory",
]
