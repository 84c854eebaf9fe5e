"""Robust secrecy-rate maximization under bounded (disk) channel errors.

After the Charnes-Cooper substitution P_bar = P_s * t and an epigraph
variable tau, each of the three semi-infinite constraints becomes a 2x2
LMI in a nonnegative multiplier through the S-procedure:

    block 1:  forall |e_s| <= eps_s:  c1 P_bar (h_s + e_s)^2 + t >= tau
    block 2:  forall |e_e| <= eps_e:  t + c2 P_bar (h_e + e_e)^2 <= 1
    block 3:  forall |e_p| <= eps_p:  P_bar (h_p + e_p)^2 <= t q

with c1 = 1/(P_p g_s^2 + sigma_s^2), c2 = 1/(P_p g_e^2 + sigma_e^2).
Every block has the affine form [[lam + alpha, gamma], [gamma, beta - lam eps^2]].

``solve_robust`` bisects on tau. Each feasibility probe reduces to the
worst-case interval condition, builds a witness (P_bar, t, lambdas) and
re-verifies it through the LMIs before accepting it.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional

from .model import ChannelInstance, ScenarioParams, SystemParams, effective_gains, secrecy_rate
from .solver_perfect import SolveResult, power_cap

PSD_TOL = 1e-9
TAU_REL_TOL = 1e-9
MARGINAL_DET = 1e-12
MAX_BISECTIONS = 200
# interior back-off ladder; a tight constraint with zero radius has no finite multiplier
WITNESS_MARGINS = (0.0, 1e-12, 1e-10)


@dataclass(frozen=True)
class CertificateVars:
    p_bar: float
    t_cc: float
    tau: float
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0

    def __post_init__(self) -> None:
        if self.p_bar < 0 or not self.t_cc > 0:
            raise ValueError("need p_bar >= 0 and t_cc > 0")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("S-procedure multipliers must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Sym2x2:
    m11: float
    m12: float
    m22: float

    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12


BlockBuilder = Callable[[float], Sym2x2]


def psd_2x2(m: Sym2x2, tol: float = PSD_TOL) -> bool:
    return (
        m.m11 >= -tol
        and m.m22 >= -tol
        and m.det() >= -tol * max(1.0, abs(m.m11 * m.m22))
    )


def constraint_blocks(
    p_bar: float,
    t_cc: float,
    tau: float,
    ch: ChannelInstance,
    params: SystemParams,
    sc: ScenarioParams,
) -> tuple[tuple[BlockBuilder, float], ...]:
    """The three LMI blocks as functions of their multiplier, paired with the radius."""
    c1 = 1.0 / (params.primary_power * ch.g_s**2 + params.noise_su)
    c2 = 1.0 / (params.primary_power * ch.g_e**2 + params.noise_eve)
    eps_s2, eps_e2, eps_p2 = ch.eps_s**2, ch.eps_e**2, ch.eps_p**2

    s1 = c1 * p_bar
    beta1 = s1 * ch.h_s**2 + t_cc - tau
    s2 = c2 * p_bar
    beta2 = 1.0 - t_cc - s2 * ch.h_e**2
    beta3 = t_cc * sc.leakage_cap - p_bar * ch.h_p**2

    def block1(lam: float) -> Sym2x2:
        return Sym2x2(lam + s1, s1 * ch.h_s, beta1 - lam * eps_s2)

    def block2(lam: float) -> Sym2x2:
        return Sym2x2(lam - s2, -s2 * ch.h_e, beta2 - lam * eps_e2)

    def block3(lam: float) -> Sym2x2:
        return Sym2x2(lam - p_bar, -p_bar * ch.h_p, beta3 - lam * eps_p2)

    return (block1, ch.eps_s), (block2, ch.eps_e), (block3, ch.eps_p)


def build_lmis(
    v: CertificateVars, ch: ChannelInstance, params: SystemParams, sc: ScenarioParams
) -> tuple[Sym2x2, Sym2x2, Sym2x2]:
    (b1, _), (b2, _), (b3, _) = constraint_blocks(v.p_bar, v.t_cc, v.tau, ch, params, sc)
    return b1(v.lambda1), b2(v.lambda2), b3(v.lambda3)


def _multiplier_at(builder: BlockBuilder, eps: float) -> Optional[float]:
    base = builder(0.0)
    alpha, gamma, beta = base.m11, base.m12, base.m22
    lo = max(0.0, -alpha)
    eps2 = eps * eps
    if eps2 > 0:
        hi = beta / eps2
        if hi < lo:
            return None
        # det(lam) = (lam + alpha)(beta - lam eps^2) - gamma^2 is concave; take its clamped vertex
        vertex = (beta - alpha * eps2) / (2.0 * eps2)
        return min(max(vertex, lo), hi)
    # zero radius: det is linear in lam with slope beta
    if beta > 0:
        return lo + 2.0 * gamma * gamma / beta
    return lo


def find_multiplier(builder: BlockBuilder, eps: float, tol: float = PSD_TOL) -> Optional[float]:
    """Return a multiplier lam >= 0 making ``builder(lam)`` PSD, or None.

    The block is assumed affine in lam with unit slope on m11 and slope
    -eps^2 on m22, which is how ``constraint_blocks`` builds them.
    """
    lam = _multiplier_at(builder, eps)
    if lam is None:
        return None
    m = builder(lam)
    if psd_2x2(m, tol):
        return lam
    if abs(m.det()) < MARGINAL_DET and psd_2x2(m, 10.0 * tol):
        return lam
    return None


def certificate_exists(builder: BlockBuilder, eps: float, tol: float = PSD_TOL) -> bool:
    return find_multiplier(builder, eps, tol) is not None


def _certify(
    p_s: float,
    margin: float,
    tau: float,
    ch: ChannelInstance,
    params: SystemParams,
    sc: ScenarioParams,
    b_wc: float,
    tol: float,
) -> Optional[CertificateVars]:
    p_s = p_s * (1.0 - margin)
    t_cc = (1.0 - margin) / (1.0 + b_wc * p_s)
    p_bar = p_s * t_cc
    lambdas = []
    for builder, eps in constraint_blocks(p_bar, t_cc, tau, ch, params, sc):
        lam = find_multiplier(builder, eps, tol)
        if lam is None:
            return None
        lambdas.append(lam)
    v = CertificateVars(p_bar, t_cc, tau, *lambdas)
    if verify_certificate(v, ch, params, sc, tol):
        return v
    return None


def verify_certificate(
    v: CertificateVars,
    ch: ChannelInstance,
    params: SystemParams,
    sc: ScenarioParams,
    tol: float = PSD_TOL,
) -> bool:
    """Re-check a witness from scratch: all three LMIs plus 0 <= P_bar <= t P_t."""
    if v.p_bar > v.t_cc * sc.max_power * (1.0 + tol):
        return False
    return all(psd_2x2(m, tol) for m in build_lmis(v, ch, params, sc))


def feasible_tau(
    tau: float,
    ch: ChannelInstance,
    params: SystemParams,
    sc: ScenarioParams,
    tol: float = PSD_TOL,
) -> tuple[bool, Optional[CertificateVars]]:
    """Decide whether the epigraph level ``tau`` is robustly attainable.

    Over the worst-case channel the power ratio is monotone in P_s, so the
    best candidate is the power cap when a_wc > b_wc and zero otherwise.
    That candidate is turned into a Charnes-Cooper witness with the
    eavesdropper constraint tight, and accepted only if certified.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    g = effective_gains(ch, params, worst_case=True)
    p = power_cap(g, sc) if g.a > g.b else 0.0
    if (1.0 + g.a * p) / (1.0 + g.b * p) < tau:
        return False, None
    for margin in WITNESS_MARGINS:
        v = _certify(p, margin, tau, ch, params, sc, g.b, tol)
        if v is not None:
            return True, v
    return False, None


def solve_robust(
    ch: ChannelInstance,
    params: SystemParams,
    sc: ScenarioParams,
    tol: float = TAU_REL_TOL,
) -> SolveResult:
    """Bisection on tau over [1, 1 + a_wc * P_cap].

    The reported power is P_bar / t of the last certified witness and the
    reported rate is the secrecy rate that power guarantees over the whole
    uncertainty set (i.e. at the worst-case channel).
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    start = time.perf_counter()
    g = effective_gains(ch, params, worst_case=True)
    cap = power_cap(g, sc)
    hi = 1.0 + g.a * cap
    ok, witness = feasible_tau(1.0, ch, params, sc)
    if cap <= 0 or not ok or witness is None:
        return SolveResult(p_star=0.0, rate_star=0.0, tau_star=1.0, wall_time=time.perf_counter() - start)
    lo = 1.0
    iterations = 0
    while hi - lo > tol * hi and iterations < MAX_BISECTIONS:
        mid = 0.5 * (lo + hi)
        ok, v = feasible_tau(mid, ch, params, sc)
        if ok:
            lo, witness = mid, v
        else:
            hi = mid
        iterations += 1
    p = witness.p_bar / witness.t_cc
    p = min(p, cap)
    return SolveResult(
        p_star=p,
        rate_star=secrecy_rate(p, g),
        t_star=witness.t_cc,
        iterations=iterations,
        wall_time=time.perf_counter() - start,
        tau_star=lo,
        certificate=witness,
    )
