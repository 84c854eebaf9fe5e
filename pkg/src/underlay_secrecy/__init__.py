"""Secrecy-rate power control for an underlay cognitive-radio link.

Conventional solvers (perfect and robust CSI) label random channel
realizations; a small numpy MLP learns to reproduce their optimal power.
"""

from .model import (
    ChannelInstance,
    EffectiveGains,
    ScenarioParams,
    SystemParams,
    effective_gains,
    gen_channel,
    leakage,
    secrecy_rate,
)
from .solver_perfect import SolveResult, closed_form, golden_search, inner_f
from .solver_robust import feasible_tau, solve_robust

__all__ = [
    "ChannelInstance",
    "EffectiveGains",
    "ScenarioParams",
    "SolveResult",
    "SystemParams",
    "closed_form",
    "effective_gains",
    "feasible_tau",
    "gen_channel",
    "golden_search",
    "inner_f",
    "leakage",
    "secrecy_rate",
    "solve_robust",
]
