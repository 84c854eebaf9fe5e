import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from underlay_secrecy.model import EffectiveGains, ScenarioParams, SystemParams, effective_gains, gen_channel
from underlay_secrecy.solver_perfect import (
    GOLDEN,
    TOL_FEAS,
    closed_form,
    golden_search,
    inner_f,
    power_cap,
)

PARAMS = SystemParams()
SC = ScenarioParams(100.0, 6.0)


def grid_inner(t, g, sc, n=10**6):
    """Brute force of the inner problem over a uniform power grid."""
    p = np.linspace(0.0, sc.max_power, n)
    ok = (p * g.leak_gain <= sc.leakage_cap) & (g.b * p <= t)
    obj = np.where(ok, 1.0 + g.a * p, -np.inf)
    k = int(np.argmax(obj))
    return obj[k], p[k], p[1] - p[0]


def grid_rate_argmax(g, sc, n=10**6):
    cap = power_cap(g, sc)
    p = np.linspace(0.0, cap, n)
    r = np.maximum(0.0, np.log2((1 + g.a * p) / (1 + g.b * p)))
    k = int(np.argmax(r))
    return p[k], r[k], p[1] - p[0]


def random_gains(rng):
    return effective_gains(gen_channel(int(rng.integers(2**63)), PARAMS), PARAMS)


def test_golden_constant():
    assert GOLDEN == pytest.approx(0.6180339887, abs=1e-10)


def test_inner_zero_budget_pins_power():
    f, p = inner_f(0.0, EffectiveGains(0.05, 0.02, 0.1), SC)
    assert (f, p) == (1.0, 0.0)


def test_inner_vacuous_eavesdropper_constraint():
    g = EffectiveGains(0.05, 0.0, 0.1)
    for t in (0.0, 0.3, 10.0):
        assert inner_f(t, g, SC)[1] == 60.0


def test_inner_worked_example_against_grid():
    g = EffectiveGains(0.05, 0.02, 0.1)
    sc = ScenarioParams(100.0, 6.0)  # q / leak = 60
    f, p = inner_f(1.0, g, sc)
    assert (f, p) == pytest.approx((3.5, 50.0))
    f_grid, p_grid, step = grid_inner(1.0, g, sc)
    assert abs(p - p_grid) <= step
    assert abs(f - f_grid) <= g.a * step


def test_inner_rejects_negative_t():
    with pytest.raises(ValueError):
        inner_f(-1.0, EffectiveGains(1, 1, 1), SC)


@pytest.mark.parametrize("seed", range(5))
def test_inner_matches_grid_random(seed):
    rng = np.random.default_rng(seed)
    g = random_gains(rng)
    t = float(rng.uniform(0, g.b * SC.max_power))
    f, p = inner_f(t, g, SC)
    f_grid, p_grid, step = grid_inner(t, g, SC)
    assert abs(p - p_grid) <= step


def test_golden_zero_leakage_cap():
    res = golden_search(EffectiveGains(0.05, 0.01, 0.1), ScenarioParams(100.0, 0.0))
    assert (res.p_star, res.rate_star) == (0.0, 0.0)


def test_golden_rejects_bad_tol():
    with pytest.raises(ValueError):
        golden_search(EffectiveGains(0.05, 0.01, 0.1), SC, tol=0.0)


@pytest.mark.parametrize("a,b", [(0.01, 0.05), (0.02, 0.02), (0.0, 0.3)])
def test_golden_no_secrecy(a, b):
    res = golden_search(EffectiveGains(a, b, 0.02), SC)
    assert res.rate_star == 0.0
    assert res.p_star == 0.0


def test_golden_degenerate_b_zero_uses_closed_form():
    g = EffectiveGains(0.05, 0.0, 0.02)
    assert golden_search(g, SC).p_star == closed_form(g, SC).p_star == 100.0


def test_closed_form_examples():
    assert closed_form(EffectiveGains(0.01, 0.02, 0.1), SC).p_star == 0.0
    assert closed_form(EffectiveGains(0.01, 0.02, 0.1), SC).rate_star == 0.0
    assert closed_form(EffectiveGains(0.05, 0.02, 0.0), SC).p_star == SC.max_power


@pytest.mark.parametrize("seed", range(5))
def test_closed_form_matches_grid(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_gains(rng)
    sc = ScenarioParams(100.0, float(rng.integers(1, 10)))
    res = closed_form(g, sc)
    p_grid, r_grid, step = grid_rate_argmax(g, sc)
    if r_grid > 0:
        assert abs(res.p_star - p_grid) <= step
    else:
        assert res.p_star == 0.0
    assert res.rate_star >= r_grid - 1e-12


def test_golden_matches_closed_form_random():
    rng = np.random.default_rng(7)
    for _ in range(500):
        g = random_gains(rng)
        sc = ScenarioParams(100.0, float(rng.integers(1, 10)))
        gs, cf = golden_search(g, sc), closed_form(g, sc)
        assert abs(gs.p_star - cf.p_star) <= 1e-6 * sc.max_power
        assert abs(gs.rate_star - cf.rate_star) <= 1e-9
        assert 0 <= gs.p_star <= sc.max_power
        assert gs.p_star * g.leak_gain <= sc.leakage_cap + TOL_FEAS


# below ~1e-6 /mW the ratio 1 + a P is indistinguishable from 1 in double precision
coef = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))
gains = st.builds(EffectiveGains, a=coef, b=coef, leak_gain=st.one_of(st.just(0.0), st.floats(1e-6, 0.5)))


@settings(max_examples=300, deadline=None)
@given(g=gains, pt=st.floats(1.0, 200.0), q=st.floats(0.0, 20.0))
def test_golden_agrees_with_closed_form_property(g, pt, q):
    sc = ScenarioParams(pt, q)
    gs, cf = golden_search(g, sc), closed_form(g, sc)
    assert abs(gs.p_star - cf.p_star) <= 1e-6 * pt
    assert abs(gs.rate_star - cf.rate_star) <= 1e-9
    assert gs.p_star * g.leak_gain <= q + TOL_FEAS


@settings(max_examples=100, deadline=None)
@given(g=gains, q=st.floats(0.0, 10.0), dq=st.floats(0.0, 10.0), pt=st.floats(1.0, 100.0), dpt=st.floats(0.0, 100.0))
def test_rate_monotone_in_caps(g, q, dq, pt, dpt):
    base = golden_search(g, ScenarioParams(pt, q)).rate_star
    assert golden_search(g, ScenarioParams(pt, q + dq)).rate_star >= base - 1e-12
    assert golden_search(g, ScenarioParams(pt + dpt, q)).rate_star >= base - 1e-12


def test_search_result_fields():
    g = EffectiveGains(0.05, 0.01, 0.02)
    res = golden_search(g, SC)
    assert res.iterations > 0
    assert res.t_star == pytest.approx(g.b * power_cap(g, SC), abs=1e-8)
    assert res.wall_time >= 0
    assert math.isclose(res.rate_star, math.log2((1 + g.a * res.p_star) / (1 + g.b * res.p_star)))
