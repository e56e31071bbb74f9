import math

import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from processing.flow_models import LegKind, PhasePoint, TangentVector, cat_model
from processing.proc_helper import window_mass
from processing.time_change import Bump, CoboundaryTerm, TimeChange, TimeChangeSpec, tau_from_preset
from utils.errors import ConfigError

BUMP_SPEC = TimeChangeSpec(1.0, (Bump(0.3, (1, 0)),))
COBOUNDARY_SPEC = TimeChangeSpec(1.0, coboundary=(CoboundaryTerm(0.1, (1, 0)),))
LEG_VECTORS = ((LegKind.STABLE, TangentVector(1.0, 0.0, 0.0)), (LegKind.UNSTABLE, TangentVector(0.0, 1.0, 0.0)))

coords = st.floats(0.0, 0.999999)
times = st.floats(-5.0, 5.0)
bump = TimeChange(BUMP_SPEC)
coboundary = TimeChange(COBOUNDARY_SPEC)


def test_spec_rejects_non_positive_tau():
    with pytest.raises(ConfigError):
        TimeChangeSpec(0.0)
    with pytest.raises(ConfigError):
        TimeChangeSpec(1.0, (Bump(0.6), Bump(0.6, (0, 1))))
    with pytest.raises(ConfigError):
        TimeChangeSpec(1.0, coboundary=(CoboundaryTerm(0.5),))


def test_spec_bounds():
    assert BUMP_SPEC.tau_min == pytest.approx(0.7)
    assert BUMP_SPEC.tau_max == pytest.approx(1.3)
    assert TimeChangeSpec(2.0).is_constant
    assert not COBOUNDARY_SPEC.is_constant
    assert 0 < COBOUNDARY_SPEC.tau_min < 1 < COBOUNDARY_SPEC.tau_max


def test_from_dict_names_the_unknown_field():
    with pytest.raises(ConfigError, match="'epsilon'"):
        TimeChangeSpec.from_dict({'c0': 1.0, 'bumps': [{'epsilon': 0.3}]})
    with pytest.raises(ConfigError, match="'c1'"):
        TimeChangeSpec.from_dict({'c0': 1.0, 'c1': 2.0})
    with pytest.raises(ConfigError, match="integer pair"):
        TimeChangeSpec.from_dict({'c0': 1.0, 'bumps': [{'eps': 0.3, 'k': [0.5, 0]}]})
    with pytest.raises(ConfigError, match="c0"):
        TimeChangeSpec.from_dict({'bumps': []})


def test_record_round_trip():
    record = {'c0': 1.5, 'bumps': [{'eps': 0.2, 'k': [1, 2], 'phase': 0.3}],
              'coboundary': [{'amp': 0.05, 'k': [0, 1], 'phase': 0.0}]}
    assert TimeChangeSpec.from_dict(record).to_dict() == record


def test_preset_lookup():
    presets = {'bump': {'c0': 1.0, 'bumps': [{'eps': 0.3, 'k': [1, 0]}]}}
    assert tau_from_preset('bump', presets) == BUMP_SPEC
    with pytest.raises(ConfigError, match='wiggle'):
        tau_from_preset('wiggle', presets)


def test_tau_stays_within_bounds(bump_tc, coboundary_tc, model, rng):
    base, roof = model.sample_arrays(rng, 2000)
    for tc in (bump_tc, coboundary_tc):
        values = tc.tau_values(base, roof)
        assert np.all(values >= tc.tau_min) and np.all(values <= tc.tau_max)
        assert tc.tau(PhasePoint(tuple(base[0]), roof[0])) == pytest.approx(values[0], rel=1e-14)


def test_dtau_matches_finite_differences(bump_tc, coboundary_tc, model):
    p, h = PhasePoint((0.31, 0.77), 0.4), 1e-6
    for tc in (bump_tc, coboundary_tc):
        along_flow = (tc.tau(model.flow(p, h)) - tc.tau(model.flow(p, -h))) / (2 * h)
        assert tc.dtau(p, TangentVector(0.0, 0.0, 1.0)) == pytest.approx(along_flow, rel=1e-8)
        for kind, v in LEG_VECTORS:
            along_leg = (tc.tau(model.leg(p, kind, h)) - tc.tau(model.leg(p, kind, -h))) / (2 * h)
            assert tc.dtau(p, v) == pytest.approx(along_leg, rel=1e-8)
            assert abs(tc.dtau(p, v)) <= tc.lipschitz(kind)


@pytest.mark.parametrize('t', [0.3, 2.0, -1.7, 4.25])
def test_constant_cocycles(constant_tc, t):
    p = PhasePoint((0.2, 0.6), 0.7)
    assert constant_tc.v_cocycle(p, t).value == pytest.approx(t)
    assert constant_tc.alpha(p, t).value == t
    assert TimeChange(TimeChangeSpec(2.0)).alpha(p, t).value == t / 2


@given(coords, coords, coords, times, times)
@settings(max_examples=50, deadline=None)
def test_v_is_additive(b1, b2, s, t, u):
    p = PhasePoint((b1, b2), s)
    lhs = bump.v_cocycle(p, t + u).value
    rhs = bump.v_cocycle(p, u).value + bump.v_cocycle(cat_model.flow(p, u), t).value
    assert lhs == pytest.approx(rhs, abs=1e-10)


@given(coords, coords, coords, times)
@settings(max_examples=50, deadline=None)
def test_alpha_inverts_v(b1, b2, s, t):
    p = PhasePoint((b1, b2), s)
    a = bump.alpha(p, t).value
    assert bump.v_cocycle(p, a).value == pytest.approx(t, abs=1e-9)
    lo, hi = sorted((t / bump.tau_max, t / bump.tau_min))
    assert lo - 1e-12 <= a <= hi + 1e-12


@given(coords, coords, coords, times)
@settings(max_examples=50, deadline=None)
def test_coboundary_v_telescopes(b1, b2, s, t):
    p = PhasePoint((b1, b2), s)
    expected = t + coboundary.xi(cat_model.flow(p, t)) - coboundary.xi(p)
    assert coboundary.v_cocycle(p, t).value == pytest.approx(expected, abs=1e-10)


def test_conjugacy_carries_flow_to_constant_speed(coboundary_tc, model, rng):
    for _ in range(20):
        p, t = model.sample(rng), rng.uniform(-5.0, 5.0)
        lhs = coboundary_tc.conjugacy(coboundary_tc.flow_tau(p, t))
        rhs = coboundary_tc.flow_kappa(coboundary_tc.conjugacy(p), t)
        assert model.dist(lhs, rhs) <= 1e-8


def test_tau_mean_keeps_only_zero_frequency():
    assert bump.tau_mean()[0] == 1.0
    assert coboundary.tau_mean()[0] == 1.0
    flat = TimeChange(TimeChangeSpec(1.0, (Bump(0.2, (0, 0)),)))
    assert flat.tau_mean()[0] == pytest.approx(1.0 + 0.2 * window_mass()[0])


def test_derivative_integral_matches_leg_derivative_of_v(bump_tc, model):
    p, t, h = PhasePoint((0.31, 0.77), 0.4), 3.0, 1e-6
    for kind, v in LEG_VECTORS:
        fd = (bump_tc.v_cocycle(model.leg(p, kind, h), t).value
              - bump_tc.v_cocycle(model.leg(p, kind, -h), t).value) / (2 * h)
        assert bump_tc.derivative_integral(p, v, t) == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))


def test_invalid_tolerance(bump_tc):
    p = PhasePoint((0.1, 0.1), 0.1)
    with pytest.raises(ValueError):
        bump_tc.v_cocycle(p, 1.0, tol=0.0)
    with pytest.raises(ValueError):
        bump_tc.alpha(p, 1.0, tol=-1.0)


def test_tau_examples(bump_tc, model):
    assert TimeChange(TimeChangeSpec(2.0)).tau(PhasePoint((0.4, 0.1), 0.3)) == 2.0
    assert bump_tc.tau(PhasePoint((0.0, 0.0), 0.5)) == pytest.approx(1.3)
    assert bump_tc.tau(PhasePoint((0.2, 0.9), 0.0)) == 1.0
    assert bump_tc.dtau(PhasePoint((0.2, 0.9), 0.0), TangentVector(0.0, 0.0, 1.0)) == 0.0
    assert bump_tc.tau_bounds() == (bump_tc.tau_min, bump_tc.tau_max)


def test_constant_two_examples():
    tc = TimeChange(TimeChangeSpec(2.0))
    p = PhasePoint((0.4, 0.1), 0.3)
    assert tc.v_cocycle(p, 3.0).value == pytest.approx(6.0)
    assert tc.alpha(p, 3.0).value == 1.5
    assert tc.flow_tau(p, 3.0) == cat_model.flow(p, 1.5)
    assert tc.density(p) == 1.0


def test_v_matches_riemann_sum(bump_tc, model):
    p, t = PhasePoint((0.31, 0.77), 0.4), 5.0
    edges = [0.0] + [k - p.roof for k in range(1, math.ceil(p.roof + t))] + [t]
    reference = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid = model.flow(p, 0.5 * (a + b))
        r = np.linspace(a, b, math.ceil((b - a) / 1e-6) + 1)
        values = bump_tc.tau_values(np.tile(mid.base, (len(r), 1)), mid.roof + r - 0.5 * (a + b))
        reference += np.trapz(values, r)
    assert bump_tc.v_cocycle(p, t).value == pytest.approx(reference, abs=1e-8)


@given(coords, coords, coords, times, times)
@settings(max_examples=30, deadline=None)
def test_time_changed_group_law(b1, b2, s, t, u):
    p = PhasePoint((b1, b2), s)
    lhs = bump.flow_tau(bump.flow_tau(p, t), u)
    assert cat_model.dist(lhs, bump.flow_tau(p, t + u)) <= 1e-8
    a = bump.alpha(p, t + u).value - bump.alpha(p, u).value - bump.alpha(bump.flow_tau(p, u), t).value
    assert abs(a) <= 1e-8
