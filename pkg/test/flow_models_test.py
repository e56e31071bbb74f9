import logging
import math

import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import given, settings

from processing.flow_models import LegKind, PhasePoint, TangentVector, cat_model, split_roof
from utils.errors import NonLocalDistanceError

coords = st.floats(0.0, 0.999999)
times = st.floats(-5.0, 5.0)


def test_eigendirections(model):
    assert model.A @ model.e_s == pytest.approx(model.e_s / model.lam, abs=1e-14)
    assert model.A @ model.e_u == pytest.approx(model.e_u * model.lam, abs=1e-14)
    assert abs(float(np.dot(model.e_s, model.e_u))) < 1e-14


def test_phase_point_rejects_roof_outside_unit_interval():
    with pytest.raises(ValueError):
        PhasePoint((0.1, 0.2), 1.0)
    with pytest.raises(ValueError):
        PhasePoint((0.1, 0.2), -0.1)
    assert PhasePoint((1.25, -0.25), 0.5).base == (0.25, 0.75)


def test_point_applies_gluing(model):
    p = model.point(0.1, 0.3, 1.0)
    assert p.roof == 0.0
    assert p.base == pytest.approx((0.5, 0.4))
    assert model.point(0.1, 0.3, 0.25) == PhasePoint((0.1, 0.3), 0.25)


@given(coords, coords, coords, times, times)
@settings(max_examples=200, deadline=None)
def test_flow_group_law(b1, b2, s, t, u):
    p = PhasePoint((b1, b2), s)
    assert cat_model.dist(cat_model.flow(cat_model.flow(p, t), u), cat_model.flow(p, t + u)) <= 1e-9


def test_flow_zero_is_identity(model):
    p = PhasePoint((0.3, 0.7), 0.2)
    assert model.flow(p, 0.0) is p


def test_dflow_scales_legs_and_keeps_flow_direction(model):
    p = PhasePoint((0.3, 0.7), 0.6)
    v = model.dflow(p, TangentVector(1.0, 1.0, 2.0), 2.5)
    n = model.crossings(p, 2.5)
    assert n == 3
    assert v.xi_s == pytest.approx(model.lam ** -3)
    assert v.xi_u == pytest.approx(model.lam ** 3)
    assert v.xi_c == 2.0


@given(coords, coords, coords, times)
@settings(max_examples=100, deadline=None)
def test_legs_commute_with_flow(b1, b2, s, t):
    p = PhasePoint((b1, b2), s)
    n = cat_model.crossings(p, t)
    for kind in (LegKind.STABLE, LegKind.UNSTABLE):
        lhs = cat_model.flow(cat_model.leg(p, kind, 0.01), t)
        rhs = cat_model.leg(cat_model.flow(p, t), kind, 0.01 * cat_model.leg_scale(kind, n))
        assert cat_model.dist(lhs, rhs) <= 1e-9


def test_leg_back_and_forth(model):
    p = PhasePoint((0.95, 0.02), 0.4)
    for kind in ('s', 'u'):
        q = model.leg(model.leg(p, kind, 0.15), kind, -0.15)
        assert model.dist(p, q) <= 1e-14


def test_dist_across_gluing(model):
    p = PhasePoint((0.1, 0.3), 1.0 - 1e-6)
    q = model.point(0.1, 0.3, 1.0)
    assert model.dist(p, q) == pytest.approx(1e-6, abs=1e-9)
    assert model.dist(q, p) == pytest.approx(1e-6, abs=1e-9)


def test_dist_strict_rejects_non_local_pairs(model, caplog):
    p, q = PhasePoint((0.0, 0.0), 0.0), PhasePoint((0.5, 0.5), 0.5)
    with caplog.at_level(logging.WARNING):
        assert model.dist(p, q) > 0.25
    assert 'Non-local distance' in caplog.text
    with pytest.raises(NonLocalDistanceError):
        model.dist(p, q, strict=True)


@pytest.mark.parametrize('t0,t1', [(0.0, 3.7), (-2.2, 0.0), (-1.3, 2.4), (0.4, 0.5), (1.0, 3.0)])
def test_panels_cover_the_segment(model, t0, t1):
    p = PhasePoint((0.2, 0.9), 0.35)
    panels = list(model.panels(p, t0, t1))
    assert sum(panel.hi - panel.lo for panel in panels) == pytest.approx(t1 - t0, abs=1e-12)
    for panel in panels:
        assert 0.0 <= panel.lo < panel.hi <= 1.0
        assert model.dist(PhasePoint(tuple(panel.base), panel.lo), model.flow(p, panel.t_lo)) <= 1e-12


def test_panels_are_outward_and_contiguous(model):
    p = PhasePoint((0.2, 0.9), 0.35)
    forward = list(model.panels(p, 0.0, 3.0))
    backward = list(model.panels(p, -3.0, 0.0))
    assert [panel.n for panel in forward] == [0, 1, 2, 3]
    assert [panel.n for panel in backward] == [0, -1, -2, -3]
    assert forward[0].lo == pytest.approx(0.35)
    assert backward[0].hi == pytest.approx(0.35)


def test_sampling_is_haar_shaped(model, rng):
    base, roof = model.sample_arrays(rng, 1000)
    assert base.shape == (1000, 2) and roof.shape == (1000,)
    assert np.all((base >= 0) & (base < 1)) and np.all((roof >= 0) & (roof < 1))
    assert abs(float(roof.mean()) - 0.5) < 0.05
    assert len(model.sample_many(rng, 5)) == 5


@given(coords, coords, coords, st.floats(0.0, 6.0))
@settings(max_examples=100, deadline=None)
def test_adapted_norm_rates_are_uniform(b1, b2, s, t):
    p = PhasePoint((b1, b2), s)
    q = cat_model.flow(p, t)
    stable = TangentVector(1.0, 0.0, 0.0)
    unstable = TangentVector(0.0, 1.0, 0.0)
    rate_s = cat_model.norm(q, cat_model.dflow(p, stable, t)) / cat_model.norm(p, stable)
    rate_u = cat_model.norm(q, cat_model.dflow(p, unstable, t)) / cat_model.norm(p, unstable)
    assert rate_s == pytest.approx(cat_model.lam ** -t, rel=1e-9)
    assert rate_u == pytest.approx(cat_model.lam ** t, rel=1e-9)


def test_uniform_constants_are_center_bunched(model):
    a, b, A, B, C = model.uniform_constants()
    assert (a, b) == (0.0, 0.0)
    assert A == B == pytest.approx(math.log(model.lam))
    assert model.uniform_center_bunched()


@pytest.mark.parametrize('r', [1, 2, 3])
def test_fiber_path_reaches_orbit_point(model, r):
    p = PhasePoint((0.31, 0.77), 0.4)
    legs = model.fiber_path(p, r)
    q = p
    for kind, u in legs:
        assert abs(u) <= 0.2
        q = model.leg(q, kind, u)
    assert model.dist(q, model.flow(p, r)) <= 1e-10


def test_fiber_path_needs_integer_periods(model):
    with pytest.raises(ValueError):
        model.fiber_path(PhasePoint((0.1, 0.1), 0.0), 0.5)


def test_flow_examples(model):
    p = PhasePoint((0.3, 0.4), 0.2)
    half = model.flow(p, 0.5)
    assert half.base == p.base
    assert half.roof == pytest.approx(0.7)
    q = model.flow(p, 1.0)
    assert q.base == pytest.approx((0.0, 0.7))
    assert q.roof == pytest.approx(0.2)
    assert model.dist(model.flow(model.flow(p, -0.5), 0.5), p) <= 1e-12


def test_dflow_examples(model):
    lam = model.lam
    assert model.dflow(PhasePoint((0.1, 0.2), 0.0), TangentVector(1.0, 0.0, 0.0), 2.0) == \
        TangentVector(lam ** -2, 0.0, 0.0)
    assert model.dflow(PhasePoint((0.1, 0.2), 0.5), TangentVector(1.0, 1.0, 0.0), 1.0) == \
        TangentVector(lam ** -1, lam, 0.0)
    assert model.dflow(PhasePoint((0.1, 0.2), 0.7), TangentVector(0.0, 0.0, 1.0), -3.3).xi_c == 1.0


def test_dflow_is_a_cocycle(model):
    p, v = PhasePoint((0.6, 0.1), 0.8), TangentVector(0.3, -1.2, 0.5)
    for t, u in ((1.7, 2.6), (-0.4, 3.1), (2.2, -4.9)):
        step = model.dflow(model.flow(p, t), model.dflow(p, v, t), u)
        assert step.as_array() == pytest.approx(model.dflow(p, v, t + u).as_array(), rel=1e-12)


def test_dist_examples(model):
    p = PhasePoint((0.3, 0.4), 0.2)
    assert model.dist(p, p) == 0.0
    assert model.dist(PhasePoint((0.99, 0.0), 0.5), PhasePoint((0.01, 0.0), 0.5)) == pytest.approx(0.02)
    assert model.dist(p, model.flow(p, 1e-4)) == pytest.approx(1e-4, rel=1e-6)


def test_legs_commute_exactly(model):
    p = PhasePoint((0.3, 0.4), 0.2)
    q = model.leg_s(model.leg_u(p, 0.05), 0.03)
    back = model.leg_s(model.leg_u(q, -0.05), -0.03)
    assert model.dist(back, p) <= 1e-15
    assert model.leg_s(p, 0.0) is p


@pytest.mark.parametrize('s,t', [(0.0, -1e-300), (0.0, -2.9e-178), (0.3, -0.30000000000000004)])
def test_crossings_agree_with_flow_at_the_roof(model, s, t):
    p = PhasePoint((0.3, 0.4), s)
    q = model.flow(p, t)
    n = model.crossings(p, t)
    assert n == 0
    assert q.base == p.base
    stable = TangentVector(1.0, 0.0, 0.0)
    back = model.dflow(q, model.dflow(p, stable, t), -t)
    assert back.xi_s == pytest.approx(1.0, rel=1e-12)
    assert split_roof(p.roof + t) == (n, q.roof)


def test_split_roof_keeps_roof_below_one():
    assert split_roof(-1e-300) == (0, 0.0)
    assert split_roof(2.25) == (2, 0.25)
    assert split_roof(-0.5) == (-1, 0.5)


def test_panels_match_flow_near_the_roof(model):
    p = PhasePoint((0.3, 0.4), 0.3)
    panels = list(model.panels(p, -0.30000000000000004, 0.0))
    assert all(panel.n == model.crossings(p, -0.30000000000000004) for panel in panels)
    assert list(model.panels(PhasePoint((0.3, 0.4), 0.0), -1e-300, 0.0)) == []
