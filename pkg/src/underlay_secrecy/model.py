"""Physical model of the underlay secure link.

Channels are kept as nonnegative real magnitudes: every quantity used
downstream depends only on |h|^2, and the extremal points of a disk
|e| <= eps around a scalar estimate are plain magnitude shifts.
All powers are in mW.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]

FEATURE_NAMES = ("h_s", "h_p", "h_e", "g_s", "g_e", "eps_s", "eps_e", "eps_p")


@dataclass(frozen=True)
class SystemParams:
    """Fixed physical constants of the network.

    Defaults are the evaluation setup: 60 mW primary transmitter, noise
    variance 0.001 mW at both receivers, path-loss exponent 1.7 and
    distances d_s=10, d_e=20, d_p=10, c_s=20, c_e=20 metres.
    """

    primary_power: float = 60.0
    noise_su: float = 1e-3
    noise_eve: float = 1e-3
    path_loss_exp: float = 1.7
    d_s: float = 10.0
    d_e: float = 20.0
    d_p: float = 10.0
    c_s: float = 20.0
    c_e: float = 20.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{f.name} must be finite and > 0, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScenarioParams:
    max_power: float = 100.0  # P_t, mW
    leakage_cap: float = 6.0  # q, mW

    def __post_init__(self) -> None:
        if not (math.isfinite(self.max_power) and self.max_power > 0):
            raise ValueError(f"max_power must be finite and > 0, got {self.max_power!r}")
        if not (math.isfinite(self.leakage_cap) and self.leakage_cap >= 0):
            raise ValueError(f"leakage_cap must be finite and >= 0, got {self.leakage_cap!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChannelInstance:
    """Estimated channel magnitudes plus uncertainty radii for one realization.

    Field order matches the network input vector. A perfect-CSI instance is
    one whose three radii are all zero.
    """

    h_s: float
    h_p: float
    h_e: float
    g_s: float
    g_e: float
    eps_s: float = 0.0
    eps_e: float = 0.0
    eps_p: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{f.name} must be finite and >= 0, got {value!r}")

    @property
    def is_perfect(self) -> bool:
        return self.eps_s == 0 and self.eps_e == 0 and self.eps_p == 0

    def features(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    @classmethod
    def from_features(cls, row: Sequence[float]) -> "ChannelInstance":
        if len(row) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(row)}")
        return cls(*(float(v) for v in row))

    def with_uncertainty(self, eps_s: float, eps_e: float, eps_p: float) -> "ChannelInstance":
        return ChannelInstance(self.h_s, self.h_p, self.h_e, self.g_s, self.g_e, eps_s, eps_e, eps_p)


@dataclass(frozen=True)
class EffectiveGains:
    """Per-unit-power SINR coefficients and the leakage gain.

    ``a`` and ``b`` are gamma_s / P_s and gamma_e / P_s in 1/mW;
    ``leak_gain`` is |h_p|^2.
    """

    a: float
    b: float
    leak_gain: float


def _normalize_seed(seed: SeedLike):
    # numpy rejects negative entropy; fold signed 64-bit seeds into uint64
    if isinstance(seed, (int, np.integer)):
        return int(seed) & 0xFFFFFFFFFFFFFFFF
    return [int(s) & 0xFFFFFFFFFFFFFFFF for s in seed]


def path_loss_scale(distance: float, exponent: float) -> float:
    """Amplitude scale sqrt(d^-alpha)."""
    return math.sqrt(distance ** (-exponent))


def gen_channel(
    seed: SeedLike,
    params: SystemParams,
    uncertainty_profile: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> ChannelInstance:
    """Draw one Rayleigh realization with path loss.

    Each link is chi * sqrt(d^-alpha) with chi ~ CN(0, 1); only |.| is kept.
    ``seed`` may be an int or a sequence of ints (used as SeedSequence entropy).
    """
    rng = np.random.default_rng(_normalize_seed(seed))
    uv = rng.standard_normal((5, 2)) / math.sqrt(2.0)
    chi = np.hypot(uv[:, 0], uv[:, 1])
    alpha = params.path_loss_exp
    scales = (
        path_loss_scale(params.d_s, alpha),
        path_loss_scale(params.d_p, alpha),
        path_loss_scale(params.d_e, alpha),
        path_loss_scale(params.c_s, alpha),
        path_loss_scale(params.c_e, alpha),
    )
    mags = [float(c) * s for c, s in zip(chi, scales)]
    eps_s, eps_e, eps_p = uncertainty_profile
    return ChannelInstance(*mags, eps_s=eps_s, eps_e=eps_e, eps_p=eps_p)


def effective_gains(ch: ChannelInstance, params: SystemParams, worst_case: bool = False) -> EffectiveGains:
    if worst_case:
        h_s = max(ch.h_s - ch.eps_s, 0.0)
        h_e = ch.h_e + ch.eps_e
        h_p = ch.h_p + ch.eps_p
    else:
        h_s, h_e, h_p = ch.h_s, ch.h_e, ch.h_p
    interf_s = params.primary_power * ch.g_s**2 + params.noise_su
    interf_e = params.primary_power * ch.g_e**2 + params.noise_eve
    return EffectiveGains(a=h_s**2 / interf_s, b=h_e**2 / interf_e, leak_gain=h_p**2)


def effective_gains_array(features: np.ndarray, params: SystemParams, worst_case: bool = True):
    """Vectorized ``effective_gains`` over an (n, 8) feature matrix.

    Returns arrays (a, b, leak_gain).
    """
    f = np.asarray(features, dtype=float)
    h_s, h_p, h_e, g_s, g_e, eps_s, eps_e, eps_p = f.T
    if worst_case:
        h_s = np.maximum(h_s - eps_s, 0.0)
        h_e = h_e + eps_e
        h_p = h_p + eps_p
    a = h_s**2 / (params.primary_power * g_s**2 + params.noise_su)
    b = h_e**2 / (params.primary_power * g_e**2 + params.noise_eve)
    return a, b, h_p**2


def secrecy_rate(p_s, g: EffectiveGains):
    """[log2(1 + a P) - log2(1 + b P)]^+ in bits/s/Hz. Accepts scalars or arrays."""
    return rate_from_coeffs(p_s, g.a, g.b)


def rate_from_coeffs(p_s, a, b):
    p_s = np.asarray(p_s, dtype=float)
    if np.any(p_s < 0):
        raise ValueError("transmit power must be >= 0")
    r = np.maximum(0.0, np.log2((1.0 + a * p_s) / (1.0 + b * p_s)))
    return float(r) if r.ndim == 0 else r


def leakage(p_s, g: EffectiveGains):
    """Interference leakage P_s |h_p|^2 at the primary receiver, in mW."""
    if np.any(np.asarray(p_s) < 0):
        raise ValueError("transmit power must be >= 0")
    return p_s * g.leak_gain
