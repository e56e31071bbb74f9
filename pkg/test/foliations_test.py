import math

import pytest

from processing.flow_models import LegKind, PhasePoint, TangentVector
from processing.foliations import LeafPoint, angle, beta, beta_s, beta_u, comparability, contraction_rate, dbeta, \
    dbeta_s, dbeta_u, dflow_tau, horizon, lift, lift_s, phi_s, phi_u, separation, slide_time, split_frame, \
    splitting_defect, tail_bound
from utils.errors import LeafError

X = PhasePoint((0.31, 0.77), 0.4)
STABLE = TangentVector(1.0, 0.0, 0.0)
UNSTABLE = TangentVector(0.0, 1.0, 0.0)


def test_constant_time_change_keeps_leaves(constant_tc):
    assert beta(constant_tc, X, LeafPoint(X, 's', 0.1)).value == 0.0
    assert lift_s(constant_tc, X, STABLE) == STABLE
    assert phi_u(constant_tc, X, LeafPoint(X, 'u', 0.1)) == constant_tc.model.leg_u(X, 0.1)


def test_leaf_points_must_match_anchor_and_kind(bump_tc):
    with pytest.raises(LeafError):
        beta_s(bump_tc, X, LeafPoint(X, 'u', 0.01))
    with pytest.raises(LeafError):
        beta_u(bump_tc, X, LeafPoint(PhasePoint((0.1, 0.1), 0.1), 'u', 0.01))


def test_tail_bound_meets_tolerance_at_horizon(bump_tc):
    for kind in (LegKind.STABLE, LegKind.UNSTABLE):
        T = horizon(bump_tc, kind, 0.05, 1e-10)
        assert tail_bound(bump_tc, kind, 0.05, T) < 1e-10
    assert horizon(bump_tc, LegKind.STABLE, 0.0, 1e-10) == 2.0


@pytest.mark.parametrize('u', [0.001, 0.05, -0.1])
def test_beta_matches_truncated_orbit_integrals(bump_tc, model, u):
    # beyond T = 12 rounding in A^n outgrows the truncation error
    T = 12.0
    y_s, y_u = model.leg_s(X, u), model.leg_u(X, u)
    stable = bump_tc.v_cocycle(X, T).value - bump_tc.v_cocycle(y_s, T).value
    unstable = bump_tc.v_cocycle(X, -T).value - bump_tc.v_cocycle(y_u, -T).value
    bound = tail_bound(bump_tc, LegKind.STABLE, u, T) + 1e-9
    assert abs(beta_s(bump_tc, X, LeafPoint(X, 's', u)).value - stable) <= bound
    bound = tail_bound(bump_tc, LegKind.UNSTABLE, u, T) + 1e-9
    assert abs(beta_u(bump_tc, X, LeafPoint(X, 'u', u)).value - unstable) <= bound


def test_beta_is_antisymmetric(bump_tc, model):
    for kind in ('s', 'u'):
        y = model.leg(X, kind, 0.07)
        forward = beta(bump_tc, X, LeafPoint(X, kind, 0.07)).value
        backward = beta(bump_tc, y, LeafPoint(y, kind, -0.07)).value
        assert forward + backward == pytest.approx(0.0, abs=1e-9)


def test_slide_time_solves_graph_equation(bump_tc):
    leaf = LeafPoint(X, 's', 0.05)
    T, b = slide_time(bump_tc, X, leaf)
    assert bump_tc.v_cocycle(leaf.point(bump_tc.model), T).value == pytest.approx(-b, abs=1e-9)
    assert phi_s(bump_tc, X, leaf) == bump_tc.model.flow(leaf.point(bump_tc.model), T)


def test_graph_leaves_contract(bump_tc, constant_tc, model):
    rate = contraction_rate(bump_tc, X)
    assert rate <= -0.7 * model.log_lam / bump_tc.tau_max
    assert contraction_rate(bump_tc, X, kind=LegKind.UNSTABLE) <= -0.7 * model.log_lam / bump_tc.tau_max
    control = contraction_rate(constant_tc, X)
    assert control == pytest.approx(-model.log_lam, rel=0.05)


def test_contraction_rate_arguments(bump_tc):
    with pytest.raises(ValueError):
        contraction_rate(bump_tc, X, t_max=5.0)
    with pytest.raises(ValueError):
        contraction_rate(bump_tc, X, u=0.01)


def test_separation_starts_at_leg_size(bump_tc, model):
    leaf = LeafPoint(X, 's', 1e-3)
    direct = model.dist(X, bump_tc.flow_tau(leaf.point(model), -beta(bump_tc, X, leaf).value))
    assert separation(bump_tc, X, 's', 1e-3, 0.0) == pytest.approx(direct, rel=1e-2)


@pytest.mark.parametrize('kind,v', [('s', STABLE), ('u', UNSTABLE)])
def test_dbeta_matches_finite_difference(bump_tc, kind, v):
    h = 1e-5
    fd = (beta(bump_tc, X, LeafPoint(X, kind, h), 1e-13).value
          - beta(bump_tc, X, LeafPoint(X, kind, -h), 1e-13).value) / (2 * h)
    assert dbeta(bump_tc, X, v, kind, 1e-12) == pytest.approx(fd, abs=1e-6)


def test_dbeta_needs_pure_leaf_vectors(bump_tc):
    with pytest.raises(ValueError):
        dbeta_s(bump_tc, X, TangentVector(1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        dbeta_u(bump_tc, X, TangentVector(0.0, 1.0, 0.5))
    assert dbeta_s(bump_tc, X, TangentVector()) == 0.0


def test_lift_corrects_only_the_flow_direction(bump_tc):
    lifted = lift(bump_tc, X, STABLE, 's')
    assert (lifted.xi_s, lifted.xi_u) == (1.0, 0.0)
    assert lifted.xi_c == pytest.approx(-dbeta_s(bump_tc, X, STABLE) / bump_tc.tau(X))
    frame = split_frame(bump_tc, X)
    assert frame.e_c == TangentVector(0.0, 0.0, 1.0)
    assert frame.e_u_tilde.xi_u == 1.0


@pytest.mark.parametrize('T', [1.0, 2.0, 5.0, 10.0])
def test_lifted_splitting_is_invariant(bump_tc, coboundary_tc, T):
    for tc in (bump_tc, coboundary_tc):
        assert splitting_defect(tc, X, T, LegKind.STABLE) <= 1e-5
        assert splitting_defect(tc, X, T, LegKind.UNSTABLE) <= 1e-5


def test_dflow_tau_preserves_time_changed_generator(bump_tc):
    # the generator of g^tau is X / tau
    image, y = dflow_tau(bump_tc, X, TangentVector(0.0, 0.0, 1.0 / bump_tc.tau(X)), 3.0)
    assert image.xi_c == pytest.approx(1.0 / bump_tc.tau(y), rel=1e-12)


def test_comparability_within_constant(bump_tc, model, rng):
    lo, hi, k_emp = comparability(bump_tc, model.sample_many(rng, 20))
    assert 1.0 / k_emp <= lo <= hi <= k_emp
    assert lo >= 1.0


def test_angle():
    assert angle(STABLE, STABLE * -2.0) == 0.0
    assert angle(STABLE, UNSTABLE) == pytest.approx(math.pi / 2)
