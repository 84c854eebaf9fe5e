"""Secrecy-rate maximization with perfect channel knowledge.

The fractional objective is split into an outer search over the
eavesdropper-SINR budget t and an inner problem that, for a scalar
power, is linear and solved in closed form. The outer ratio f(t)/(1+t)
is searched with golden-section steps. ``closed_form`` is an independent
analytic oracle based on monotonicity of the ratio in P_s.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Any, Optional

from .model import EffectiveGains, ScenarioParams, secrecy_rate

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TOL = 1e-8
TOL_FEAS = 1e-9


@dataclass(frozen=True)
class SolveResult:
    p_star: float  # mW
    rate_star: float  # bits/s/Hz
    t_star: float = 0.0
    iterations: int = 0
    wall_time: float = 0.0
    tau_star: Optional[float] = None
    certificate: Optional[Any] = None

    def to_dict(self) -> dict:
        out = {
            "p_star": self.p_star,
            "rate_star": self.rate_star,
            "t_star": self.t_star,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
        }
        if self.tau_star is not None:
            out["tau_star"] = self.tau_star
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


def power_cap(g: EffectiveGains, sc: ScenarioParams) -> float:
    """Largest power satisfying both the budget and the leakage cap."""
    if g.leak_gain > 0:
        return min(sc.max_power, sc.leakage_cap / g.leak_gain)
    return sc.max_power


def inner_f(t: float, g: EffectiveGains, sc: ScenarioParams) -> tuple[float, float]:
    """Inner problem for a fixed eavesdropper-SINR budget ``t``.

    Returns ``(f(t), P(t))`` where P(t) = min(P_t, q/|h_p|^2, t/b), with a
    zero denominator meaning that cap is absent.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    p = power_cap(g, sc)
    if g.b > 0:
        p = min(p, t / g.b)
    return 1.0 + g.a * p, p


def closed_form(g: EffectiveGains, sc: ScenarioParams) -> SolveResult:
    start = time.perf_counter()
    p = power_cap(g, sc) if g.a > g.b else 0.0
    return SolveResult(p_star=p, rate_star=secrecy_rate(p, g), wall_time=time.perf_counter() - start)


def golden_search(g: EffectiveGains, sc: ScenarioParams, tol: float = DEFAULT_TOL) -> SolveResult:
    """Maximize f(t)/(1+t) over t in [0, t_max] by golden-section search.

    t_max = b * min(P_t, q/|h_p|^2) is the largest eavesdropper SINR any
    feasible power can produce. The search stops once the bracket width is
    at most ``tol``; the best of the bracket points is returned, ties going
    to the smaller t. A best ratio of 1 or less means no secrecy is
    achievable and zero power is returned.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    start = time.perf_counter()
    cap = power_cap(g, sc)
    if cap <= 0:
        return SolveResult(p_star=0.0, rate_star=0.0, wall_time=time.perf_counter() - start)
    if g.b == 0:
        # ratio no longer depends on t
        return replace(closed_form(g, sc), wall_time=time.perf_counter() - start)

    a_coef, b_coef = g.a, g.b

    def ratio(t: float) -> float:
        p = min(cap, t / b_coef)
        return (1.0 + a_coef * p) / (1.0 + t)

    lo, hi = 0.0, b_coef * cap
    t1 = lo + (1.0 - GOLDEN) * (hi - lo)
    t2 = lo + GOLDEN * (hi - lo)
    r1, r2 = ratio(t1), ratio(t2)
    iterations = 0
    while hi - lo > tol:
        if r1 > r2:
            hi = t2
            t2, r2 = t1, r1
            t1 = lo + (1.0 - GOLDEN) * (hi - lo)
            r1 = ratio(t1)
        else:
            lo = t1
            t1, r1 = t2, r2
            t2 = lo + GOLDEN * (hi - lo)
            r2 = ratio(t2)
        iterations += 1

    best_t, best_r = lo, ratio(lo)
    for t, r in ((t1, r1), (t2, r2), (hi, ratio(hi))):
        if r > best_r or (r == best_r and t < best_t):
            best_t, best_r = t, r
    _, p = inner_f(best_t, g, sc)
    if best_r <= 1.0 or a_coef * p <= b_coef * p:
        best_t, p = 0.0, 0.0
    return SolveResult(
        p_star=p,
        rate_star=secrecy_rate(p, g),
        t_star=best_t,
        iterations=iterations,
        wall_time=time.perf_counter() - start,
    )
