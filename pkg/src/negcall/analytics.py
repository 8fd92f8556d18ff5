"""Closed-form values and laws used as oracles.

All prices assume unit volatility, zero rates and maturity 1, so the
Black-Scholes call with strike ``K`` at time ``t`` and spot ``s`` is

    C(t, s) = s * N(d1) - K * N(d2),    d1,2 = (log(s/K) +- (1 - t)/2) / sqrt(1 - t)

Functions accept scalars or arrays and return a float for scalar input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

# remaining time below which a price is replaced by its payoff
MATURITY_GUARD = 1e-12


@dataclass(frozen=True)
class ClaimParams:
    strike: float = 1.0
    maturity: float = 1.0

    def __post_init__(self):
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if self.maturity != 1.0:
            raise DomainError("maturity is fixed at 1")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_ts(t, s, allow_maturity=True):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("price must be positive")
    bad = (t < 0) | (t > 1) if allow_maturity else (t < 0) | (t >= 1)
    if np.any(bad) or np.any(~np.isfinite(t)):
        what = "[0, 1]" if allow_maturity else "[0, 1)"
        raise DomainError(f"time must lie in {what}")
    return t, s


def normal_cdf(x):
    """Standard normal CDF."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)):
        raise DomainError("normal_cdf requires finite input")
    return _out(special.ndtr(x))


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return _out(np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi))


def _d12(rem, s, strike):
    sq = np.sqrt(rem)
    d1 = (np.log(s / strike) + 0.5 * rem) / sq
    return d1, d1 - sq, sq


def bs_price(t, s, strike=1.0):
    """Replication price of the call ``(S(1) - strike)^+``.

    At (or within ``MATURITY_GUARD`` of) maturity the payoff is returned, so
    the terminal condition holds exactly.
    """
    t, s = _check_ts(t, s)
    rem = 1.0 - t
    live = rem >= MATURITY_GUARD
    rem_safe = np.where(live, rem, 1.0)
    d1, d2, _ = _d12(rem_safe, s, strike)
    price = s * special.ndtr(d1) - strike * special.ndtr(d2)
    out = np.where(live, np.maximum(price, 0.0), np.maximum(s - strike, 0.0))
    return _out(out)


def bs_delta(t, s, strike=1.0):
    """Hedge ratio ``N(d1)`` of the call; undefined at maturity."""
    t, s = _check_ts(t, s, allow_maturity=False)
    rem = np.maximum(1.0 - t, MATURITY_GUARD)
    d1, _, _ = _d12(rem, s, strike)
    return _out(special.ndtr(d1))


def digital_price(t, s, strike=1.0):
    """Price of the cash-or-nothing call paying ``1{S(1) > strike}``."""
    t, s = _check_ts(t, s)
    rem = 1.0 - t
    live = rem >= MATURITY_GUARD
    rem_safe = np.where(live, rem, 1.0)
    _, d2, _ = _d12(rem_safe, s, strike)
    out = np.where(live, special.ndtr(d2), (s > strike).astype(float))
    return _out(out)


def digital_delta(t, s, strike=1.0):
    t, s = _check_ts(t, s, allow_maturity=False)
    rem = np.maximum(1.0 - t, MATURITY_GUARD)
    _, d2, sq = _d12(rem, s, strike)
    return _out(np.exp(-0.5 * d2 * d2) / (math.sqrt(2.0 * math.pi) * s * sq))


def qv_time(t):
    """Quadratic-variation clock ``-log(1 - t)`` of the singular integral."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | ~(t < 1)):
        raise DomainError("qv_time requires 0 <= t < 1")
    return _out(-np.log1p(-t))


def calendar_time(tau):
    """Inverse of :func:`qv_time`; ``tau = inf`` maps to maturity."""
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau >= 0)):
        raise DomainError("qv-time must be nonnegative")
    return _out(-np.expm1(-tau))


def hitting_tail(a, tau):
    """P(T_a > tau) for standard Brownian motion, ``T_a`` the passage time to ``a``.

    Reflection principle: ``2 N(a / sqrt(tau)) - 1 = erf(a / sqrt(2 tau))``.
    """
    a = np.asarray(a, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError("level must be positive")
    if np.any(~(tau >= 0)):
        raise DomainError("qv-time must be nonnegative")
    with np.errstate(divide="ignore"):
        out = np.where(tau > 0, special.erf(a / np.sqrt(2.0 * np.where(tau > 0, tau, 1.0))), 1.0)
    return _out(out)


def ruin_tail(a, depth):
    """P(min of Brownian motion before reaching ``a`` < -depth) = a / (a + depth)."""
    a = np.asarray(a, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if np.any(~(a > 0)) or np.any(~(depth > 0)):
        raise DomainError("level and depth must be positive")
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(depth), 0.0, a / (a + depth))
    return _out(out)


def hitting_time_quantile(a, q):
    """Quantile of ``T_a = a^2 / Z^2``: P(T_a <= x) = 2 (1 - N(a / sqrt(x)))."""
    z = special.ndtri(1.0 - 0.5 * np.asarray(q, dtype=float))
    return _out(np.asarray(a, dtype=float) ** 2 / z**2)
