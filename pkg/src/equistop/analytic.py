"""Closed forms for the put payoff / geometric Brownian motion case.

Hitting-time discount factors, the candidate value of threshold policies,
the optimal threshold, and classification of threshold policies as
equilibria, including the rate-band and drift-band extensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq


@dataclass(frozen=True)
class ExponentPair:
    """Power-law exponents of the worst- and best-case hitting discount factors."""

    m1: float
    m2: float

    def __post_init__(self):
        if not self.m1 >= self.m2 > 0:
            raise ValueError(f"need m1 >= m2 > 0, got ({self.m1}, {self.m2})")


@dataclass(frozen=True)
class PutGbmProblem:
    """Put payoff (K - x)^+ on a GBM with an uncertain volatility band.

    Exactly one of the plain, rate-band, drift-band modes is active.
    """

    strike: float
    discount: float
    sigma_band: tuple[float, float]
    alpha: float
    rate_band: Optional[tuple[float, float]] = None
    drift_band: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.discount <= 0:
            raise ValueError("discount must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        lo, hi = self.sigma_band
        if not 0 < lo <= hi:
            raise ValueError("need 0 < sigma_low <= sigma_high")
        if self.rate_band is not None and self.drift_band is not None:
            raise ValueError("rate_band and drift_band are mutually exclusive")
        for band, name in ((self.rate_band, "rate"), (self.drift_band, "drift")):
            if band is not None and not 0 < band[0] <= band[1]:
                raise ValueError(f"need 0 < {name}_low <= {name}_high")

    @property
    def mode(self) -> str:
        if self.rate_band is not None:
            return "rate-band"
        if self.drift_band is not None:
            return "drift-band"
        return "plain"


def discounted_hitting_factor(x: float, a: float, r: float, sigma: float) -> float:
    """Expected discount e^{-r T_a} for a GBM started at x >= a, drift r, volatility sigma."""
    if a <= 0 or x <= 0 or r <= 0 or sigma <= 0:
        raise ValueError("x, a, r, sigma must be positive")
    if a > x:
        raise ValueError("need a <= x (downward hit)")
    return _power(a / x, 2.0 * r / sigma**2)


def _power(ratio: float, exponent: float) -> float:
    # log-space evaluation; exponent*log(ratio) < -745 underflows cleanly to 0
    if ratio == 1.0:
        return 1.0
    return math.exp(exponent * math.log(ratio))


def exponents(problem: PutGbmProblem) -> ExponentPair:
    """Worst/best-case exponent pair for the active uncertainty mode."""
    s_lo, s_hi = problem.sigma_band
    r = problem.discount
    if problem.mode == "plain":
        return ExponentPair(2.0 * r / s_lo**2, 2.0 * r / s_hi**2)
    if problem.mode == "rate-band":
        r_lo, r_hi = problem.rate_band
        return ExponentPair(2.0 * r_hi / s_lo**2, 2.0 * r_lo / s_hi**2)
    b_lo, b_hi = problem.drift_band
    m1 = math.sqrt(b_hi**2 / s_lo**4 + (2.0 * r - b_hi) / s_lo**2 + 0.25) + b_hi / s_lo**2 - 0.5
    m2 = math.sqrt(b_lo**2 / s_hi**4 + (2.0 * r - b_lo) / s_hi**2 + 0.25) + b_lo / s_hi**2 - 0.5
    return ExponentPair(m1, m2)


def lambda_value(x: float, a: float, problem: PutGbmProblem) -> float:
    """Value of the threshold policy (0, a] at state x >= a: the weighted
    combination (K - a) (alpha (a/x)^m1 + (1 - alpha) (a/x)^m2)."""
    if not 0 < a <= x:
        raise ValueError("need 0 < a <= x")
    if a > problem.strike:
        raise ValueError("need a <= strike")
    e = exponents(problem)
    ratio = a / x
    w = problem.alpha * _power(ratio, e.m1) + (1.0 - problem.alpha) * _power(ratio, e.m2)
    return (problem.strike - a) * w


def _ambiguity_weight(problem: PutGbmProblem) -> float:
    e = exponents(problem)
    return problem.alpha * e.m1 + (1.0 - problem.alpha) * e.m2


def a_star(problem: PutGbmProblem) -> float:
    """Smallest equilibrium threshold; (0, a*] is the optimal equilibrium."""
    w = _ambiguity_weight(problem)
    return w / (1.0 + w) * problem.strike


def crossing_point(a: float, problem: PutGbmProblem) -> float:
    """Unique x* in (a, K) where the threshold-policy value crosses the payoff.

    Exists only for a < a*; located by bracketing and bisection to 1e-10 in x.
    """
    astar = a_star(problem)
    if not 0 < a < astar:
        raise ValueError("crossing point exists only for 0 < a < a_star")
    K = problem.strike

    def f(x):
        return lambda_value(x, a, problem) - (K - x)

    # f < 0 just above a (slope < -1), f(K) > 0; expand a bracket from the left
    lo = None
    step = (K - a) * 0.5
    while step > 1e-14 * K:
        cand = a + step
        if f(cand) < 0:
            lo = cand
            break
        step *= 0.5
    if lo is None:
        raise ArithmeticError("failed to bracket the crossing (a too close to a_star)")
    return float(brentq(f, lo, K, xtol=1e-10))


def classify_policy(a: float, problem: PutGbmProblem) -> str:
    """'equilibrium' iff the threshold is at least a*."""
    if not 0 < a <= problem.strike:
        raise ValueError("threshold must lie in (0, K]")
    return "equilibrium" if a >= a_star(problem) else "not-equilibrium"


def optimal_equilibrium(problem: PutGbmProblem) -> float:
    """Threshold of the pointwise-dominant equilibrium policy (0, a*]."""
    return a_star(problem)


def value_of_equilibrium(x: float, a: float, problem: PutGbmProblem) -> float:
    """V(x) = payoff for x <= a, else max(payoff, threshold-policy value)."""
    if not 0 < a <= problem.strike:
        raise ValueError("threshold must lie in (0, K]")
    if x <= 0:
        raise ValueError("state must be positive")
    g = max(problem.strike - x, 0.0)
    if x <= a:
        return g
    return max(g, lambda_value(x, a, problem))
