"""
Model-free implied variance from a single-expiry option chain, and blending of
near/next-term variances to a constant 30-day horizon.

The replication sum follows the published VIX methodology:

    sigma^2 = (2/T) * sum_i dK_i / K_i^2 * exp(R T) * Q(K_i) - (1/T) * (F/K0 - 1)^2

reported here multiplied by 100^2 so the result is in index points squared.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyChain,
    InvalidBracket,
    InvalidChain,
    NoStrikeBelowForward,
    TooFewStrikes,
    ZeroBidRun,
)

DAYS_PER_YEAR = 365.0


class Right(str, enum.Enum):
    CALL = "C"
    PUT = "P"

    @classmethod
    def parse(cls, text) -> "Right":
        if isinstance(text, Right):
            return text
        t = str(text).strip().upper()
        if t in ("C", "CALL"):
            return cls.CALL
        if t in ("P", "PUT"):
            return cls.PUT
        raise InvalidChain(f"unknown option right {text!r}")


@dataclass(frozen=True)
class OptionQuote:
    strike: float
    right: Right
    bid: float
    ask: float

    def __post_init__(self):
        object.__setattr__(self, "right", Right.parse(self.right))
        for name in ("strike", "bid", "ask"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.strike > 0:
            raise InvalidChain(f"strike must be positive, got {self.strike}")
        if not 0 <= self.bid <= self.ask:
            raise InvalidChain(f"need 0 <= bid <= ask at strike {self.strike}")

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)


@dataclass(frozen=True)
class OptionChainSnapshot:
    """Quotes for one expiry. ``expiry_time_years`` is T, ``forward`` is F,
    ``risk_free_rate`` is the continuously-compounded R to expiry."""

    expiry_time_years: float
    forward: float
    risk_free_rate: float
    quotes: tuple[OptionQuote, ...]

    def __post_init__(self):
        if not self.expiry_time_years > 0:
            raise InvalidChain("time to expiry must be positive")
        if not self.forward > 0:
            raise InvalidChain("forward must be positive")
        quotes = tuple(sorted(self.quotes, key=lambda q: (q.strike, q.right.value)))
        for right in Right:
            strikes = [q.strike for q in quotes if q.right is right]
            if len(strikes) != len(set(strikes)):
                raise InvalidChain(f"duplicate {right.name} strike in chain")
        object.__setattr__(self, "quotes", quotes)

    @property
    def strikes(self) -> np.ndarray:
        """Distinct listed strikes across both rights, ascending."""
        return np.unique([q.strike for q in self.quotes])

    def quote(self, strike: float, right: Right) -> OptionQuote | None:
        for q in self.quotes:
            if q.strike == strike and q.right is right:
                return q
        return None

    def scaled(self, c: float) -> "OptionChainSnapshot":
        """Strikes, forward and quotes multiplied by ``c``."""
        return OptionChainSnapshot(
            self.expiry_time_years, self.forward * c, self.risk_free_rate,
            tuple(OptionQuote(q.strike * c, q.right, q.bid * c, q.ask * c) for q in self.quotes),
        )

    def without_strike(self, strike: float) -> "OptionChainSnapshot":
        return OptionChainSnapshot(
            self.expiry_time_years, self.forward, self.risk_free_rate,
            tuple(q for q in self.quotes if q.strike != strike),
        )


@dataclass(frozen=True)
class Contribution:
    strike: float
    delta_k: float
    price: float
    value: float  # dK / K^2 * exp(RT) * Q


@dataclass(frozen=True)
class ImpliedVarianceResult:
    variance: float
    k0: float
    expiry_time_years: float
    contributions: tuple[Contribution, ...] = field(repr=False)
    forward_correction: float = 0.0

    @property
    def volatility(self) -> float:
        return math.sqrt(self.variance)


def select_k0(chain: OptionChainSnapshot) -> float:
    """Largest listed strike at or below the forward."""
    if not chain.quotes:
        raise EmptyChain("chain has no quotes")
    strikes = chain.strikes
    below = strikes[strikes <= chain.forward]
    if below.size == 0:
        raise NoStrikeBelowForward(
            f"no strike <= forward {chain.forward} (lowest strike {strikes[0]})")
    return float(below[-1])


def strike_spacing(strikes, i: int) -> float:
    """Half the distance between neighbours; one-sided at either end."""
    k = np.asarray(strikes, dtype=float)
    if k.size < 2:
        raise TooFewStrikes("strike spacing needs at least two strikes")
    if i == 0:
        return float(k[1] - k[0])
    if i == k.size - 1:
        return float(k[-1] - k[-2])
    return float(k[i + 1] - k[i - 1]) / 2.0


def _otm_walk(chain, strikes, start, step, right):
    """Strikes walked away from K0 until two consecutive zero bids."""
    picked = []
    zero_run = 0
    i = start
    while 0 <= i < strikes.size:
        q = chain.quote(float(strikes[i]), right)
        if q is None or q.bid <= 0.0:
            zero_run += 1
            if zero_run >= 2:
                break
        else:
            zero_run = 0
            picked.append((i, q.mid))
        i += step
    return picked


def implied_variance(chain: OptionChainSnapshot) -> ImpliedVarianceResult:
    """VIX-style model-free variance for one expiry (index points squared).

    Out-of-the-money puts below K0 and calls above K0 are used, with the put
    and call mid-quotes averaged at K0. Zero-bid strikes are skipped and the
    walk away from K0 stops after two consecutive zero bids. Strike spacing
    dK uses the full listed strike grid of the expiry.
    """
    if not chain.quotes:
        raise EmptyChain("chain has no quotes")
    k0 = select_k0(chain)
    strikes = chain.strikes
    i0 = int(np.searchsorted(strikes, k0))
    if strikes.size < 2:
        raise TooFewStrikes("need at least two listed strikes")

    puts = _otm_walk(chain, strikes, i0 - 1, -1, Right.PUT)
    calls = _otm_walk(chain, strikes, i0 + 1, +1, Right.CALL)
    at_k0 = [q for q in (chain.quote(k0, Right.PUT), chain.quote(k0, Right.CALL))
             if q is not None and q.bid > 0]
    if not at_k0:
        raise ZeroBidRun(f"no usable quote at K0={k0}")
    q0 = sum(q.mid for q in at_k0) / len(at_k0)

    T = chain.expiry_time_years
    growth = math.exp(chain.risk_free_rate * T)
    selected = sorted(puts + [(i0, q0)] + calls)
    contributions = []
    for i, price in selected:
        k = float(strikes[i])
        dk = strike_spacing(strikes, i)
        contributions.append(Contribution(k, dk, price, dk / (k * k) * growth * price))

    forward_correction = (chain.forward / k0 - 1.0) ** 2 / T
    total = math.fsum(c.value for c in contributions)
    variance = 100.0 ** 2 * (2.0 / T * total - forward_correction)
    return ImpliedVarianceResult(variance, k0, T, tuple(contributions),
                                 100.0 ** 2 * forward_correction)


def recompute_variance(result: ImpliedVarianceResult, risk_free_rate: float) -> float:
    """Rebuild the variance from the per-strike (K, dK, Q) triples."""
    T = result.expiry_time_years
    growth = math.exp(risk_free_rate * T)
    total = math.fsum(c.delta_k / c.strike ** 2 * growth * c.price for c in result.contributions)
    return 100.0 ** 2 * 2.0 / T * total - result.forward_correction


def blend_terms(near: ImpliedVarianceResult, next_: ImpliedVarianceResult,
                target_days: float = 30.0, extrapolate: bool = False) -> float:
    """Interpolate total variance linearly in time to ``target_days`` and
    annualize by 365/target_days.

    With weight w = (T_next - T_target) / (T_next - T_near):
    result = [w T_near V_near + (1 - w) T_next V_next] / T_target.
    """
    t1, t2 = near.expiry_time_years, next_.expiry_time_years
    tt = target_days / DAYS_PER_YEAR
    if t1 == t2:
        if t1 == tt or (extrapolate and near.variance == next_.variance):
            return near.variance
        raise InvalidBracket("near and next terms share one expiry that is not the target")
    if t1 > t2:
        raise InvalidBracket("near term must expire before next term")
    if not (t1 <= tt <= t2) and not extrapolate:
        raise InvalidBracket(
            f"target {target_days} days not bracketed by "
            f"[{t1 * DAYS_PER_YEAR:g}, {t2 * DAYS_PER_YEAR:g}] days")
    w = (t2 - tt) / (t2 - t1)
    total = w * t1 * near.variance + (1.0 - w) * t2 * next_.variance
    return total / tt


def forward_from_parity(chain: OptionChainSnapshot) -> float:
    """Forward from put-call parity at the strike with the smallest |C - P|."""
    best = None
    for k in chain.strikes:
        c = chain.quote(float(k), Right.CALL)
        p = chain.quote(float(k), Right.PUT)
        if c is None or p is None:
            continue
        diff = c.mid - p.mid
        if best is None or abs(diff) < abs(best[1]):
            best = (float(k), diff)
    if best is None:
        raise TooFewStrikes("no strike carries both a call and a put")
    k, diff = best
    return k + math.exp(chain.risk_free_rate * chain.expiry_time_years) * diff


# --- chain snapshot files -------------------------------------------------
#
# Grammar (UTF-8, comma or tab delimited):
#
#   # forward = 2101.5          header lines start with '#': key = value
#   # rate = 0.0125             plain keys apply to every expiry
#   # forward[23] = 2100.9      key[expiry_days] overrides for one expiry
#   expiry_days,right,strike,bid,ask
#   23,P,2000,1.20,1.40
#
# ``right`` is C/P (or CALL/PUT). Time to expiry is expiry_days / 365. Every
# expiry needs a forward; the rate defaults to 0.

_CHAIN_COLUMNS = ("expiry_days", "right", "strike", "bid", "ask")


def _header_value(headers: dict, key: str, days: float, default=None):
    for k in (f"{key}[{days:g}]", key):
        if k in headers:
            return headers[k]
    if default is None:
        raise InvalidChain(f"chain file has no {key!r} for expiry {days:g} days")
    return default


def parse_chain_text(text: str) -> list[OptionChainSnapshot]:
    """Parse a chain snapshot file into one snapshot per expiry (ascending)."""
    headers: dict[str, float] = {}
    rows: dict[float, list[OptionQuote]] = {}
    columns = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                try:
                    headers[key.strip().lower().replace(" ", "")] = float(value)
                except ValueError:
                    raise InvalidChain(f"line {lineno}: bad header value {value.strip()!r}")
            continue
        cells = [c.strip() for c in (line.split("\t") if "\t" in line else line.split(","))]
        if columns is None:
            lowered = [c.lower() for c in cells]
            missing = [c for c in _CHAIN_COLUMNS if c not in lowered]
            if missing:
                raise InvalidChain(f"line {lineno}: chain header lacks columns {missing}")
            columns = [lowered.index(c) for c in _CHAIN_COLUMNS]
            continue
        try:
            days, right, strike, bid, ask = (cells[i] for i in columns)
            quote = OptionQuote(float(strike), Right.parse(right), float(bid), float(ask))
            days = float(days)
        except (ValueError, IndexError) as exc:
            raise InvalidChain(f"line {lineno}: {exc}") from None
        except InvalidChain as exc:
            raise InvalidChain(f"line {lineno}: {exc}") from None
        rows.setdefault(days, []).append(quote)
    if not rows:
        raise EmptyChain("chain file has no quotes")
    chains = []
    for days in sorted(rows):
        if days <= 0:
            raise InvalidChain(f"expiry_days must be positive, got {days:g}")
        chains.append(OptionChainSnapshot(
            days / DAYS_PER_YEAR,
            _header_value(headers, "forward", days),
            _header_value(headers, "rate", days, default=0.0),
            tuple(rows[days]),
        ))
    return chains


def format_chain_text(chains: list[OptionChainSnapshot]) -> str:
    out = []
    for ch in chains:
        days = ch.expiry_time_years * DAYS_PER_YEAR
        out.append(f"# forward[{days:g}] = {ch.forward!r}")
        out.append(f"# rate[{days:g}] = {ch.risk_free_rate!r}")
    out.append(",".join(_CHAIN_COLUMNS))
    for ch in chains:
        days = ch.expiry_time_years * DAYS_PER_YEAR
        for q in ch.quotes:
            out.append(f"{days:g},{q.right.value},{q.strike!r},{q.bid!r},{q.ask!r}")
    return "\n".join(out) + "\n"
