import logging
import math
from dataclasses import dataclass

import numpy as np

from processing.flow_models import LegKind, TangentVector
from utils.errors import DegenerateFitError, LeafError, ToleranceError

# Relative accuracy of the tail integral behind a structured separation
SEPARATION_RTOL = 1e-8


@dataclass(frozen=True)
class LeafPoint:
    """
    A point of the stable or unstable leaf of an anchor, carried as (anchor, kind, leg parameter)
    """
    anchor: object
    kind: LegKind
    u: float

    def __post_init__(self):
        object.__setattr__(self, 'kind', LegKind(self.kind))
        object.__setattr__(self, 'u', float(self.u))

    def point(self, model):
        return model.leg(self.anchor, self.kind, self.u)


@dataclass(frozen=True)
class BetaValue:
    value: float
    truncation_T: float
    err_bound: float


@dataclass(frozen=True)
class SplitFrame:
    e_s_tilde: TangentVector
    e_u_tilde: TangentVector
    e_c: TangentVector


def horizon(tc, kind, size, tol):
    """
    Truncation time after which the leg integrand is certified below tol
    :param tc: TimeChange
    :param kind: LegKind
    :param size: float, leg parameter or tangent coefficient magnitude
    :param tol: float
    :return: float
    """
    scale = tc.lipschitz(kind) * abs(size)
    if scale <= tol:
        return 2.0
    return math.log(scale / tol) / tc.model.log_lam + 2.0


def tail_bound(tc, kind, size, T):
    return tc.lipschitz(kind) * abs(size) * tc.model.lam ** (-(T - 1)) / tc.model.log_lam


def leg_difference_integral(tc, x, kind, u, t0, t1):
    """
    Integral over [t0, t1] of tau(g_r x) - tau(g_r y) for y on the (kind) leaf of x at parameter u.
    Each panel uses cos(a) - cos(a + d) = 2 sin(a + d/2) sin(d/2) so that tiny offsets keep full
    relative accuracy.
    :return: tuple (value, quadrature error estimate)
    """
    if tc.is_constant or u == 0 or t1 <= t0:
        return 0.0, 0.0
    k_dir = tc.k_s if kind == LegKind.STABLE else tc.k_u
    total, err = 0.0, 0.0
    for panel in tc.model.panels(x, t0, t1):
        half = np.pi * k_dir * u * tc.model.leg_scale(kind, panel.n)
        theta = tc._phase(panel.base)
        integrals, e = tc._integrals(panel.lo, panel.hi)
        total += float(np.sum(tc.coefs * 2 * np.sin(theta + half) * np.sin(half) * integrals))
        err += e * float(np.max(np.abs(np.sin(half)), initial=0.0)) * 2
    return total, err


def _check_leaf(x, leaf, kind):
    if LegKind(leaf.kind) != kind:
        raise LeafError(f"Expected a {kind.name.lower()} leaf point, got {leaf.kind.name.lower()}")
    if leaf.anchor != x:
        raise LeafError(f"Leaf point is anchored at {leaf.anchor}, not at {x}")


def _panel_end(x, t):
    """
    Smallest time >= t at which the orbit of x crosses the roof (for t > 0), or the largest time <= t (t < 0)
    """
    if t >= 0:
        return math.ceil(x.roof + t) - x.roof
    return math.floor(x.roof + t) - x.roof


def beta(tc, x, leaf, tol=1e-10):
    """
    Graph time beta(x, y) for a leaf point y of x, stable or unstable
    :param tc: TimeChange
    :param x: PhasePoint
    :param leaf: LeafPoint anchored at x
    :param tol: float
    :return: BetaValue
    """
    kind = LegKind(leaf.kind)
    _check_leaf(x, leaf, kind)
    if tc.is_constant or leaf.u == 0:
        return BetaValue(0.0, 0.0, 0.0)
    T = horizon(tc, kind, leaf.u, tol)
    if kind == LegKind.STABLE:
        end = _panel_end(x, T)
        value, err = leg_difference_integral(tc, x, kind, leaf.u, 0.0, end)
    else:
        end = -_panel_end(x, -T)
        value, err = leg_difference_integral(tc, x, kind, leaf.u, -end, 0.0)
        value = -value
    err += tail_bound(tc, kind, leaf.u, end)
    if err > tol:
        raise ToleranceError(f"beta error bound {err} above tolerance {tol}")
    return BetaValue(value, end, err)


def beta_s(tc, x, leaf, tol=1e-10):
    """
    beta^s(x, y) = integral over [0, inf) of tau(g_r x) - tau(g_r y)
    """
    _check_leaf(x, leaf, LegKind.STABLE)
    return beta(tc, x, leaf, tol)


def beta_u(tc, x, leaf, tol=1e-10):
    """
    beta^u(x, y) = -integral over [0, inf) of tau(g_-r x) - tau(g_-r y)
    """
    _check_leaf(x, leaf, LegKind.UNSTABLE)
    return beta(tc, x, leaf, tol)


def slide_time(tc, x, leaf, tol=1e-10):
    """
    Original-flow time T_x(y) with v(y, T_x(y)) = -beta(x, y)
    :return: tuple (T, beta value)
    """
    b = beta(tc, x, leaf, tol).value
    y = leaf.point(tc.model)
    return tc.alpha(y, -b, tol).value, b


def phi(tc, x, leaf, tol=1e-10):
    """
    Graph map Phi_x(y) = g^tau_{-beta(x, y)}(y) onto the new leaf of x
    """
    b = beta(tc, x, leaf, tol).value
    return tc.flow_tau(leaf.point(tc.model), -b, tol)


def phi_s(tc, x, leaf, tol=1e-10):
    _check_leaf(x, leaf, LegKind.STABLE)
    return phi(tc, x, leaf, tol)


def phi_u(tc, x, leaf, tol=1e-10):
    _check_leaf(x, leaf, LegKind.UNSTABLE)
    return phi(tc, x, leaf, tol)


def dbeta(tc, x, v, kind, tol=1e-10):
    """
    Derivative of beta(x, .) along a leaf vector, by the integral formula
    :param tc: TimeChange
    :param x: PhasePoint
    :param v: TangentVector, purely stable (kind 's') or purely unstable (kind 'u')
    :param kind: LegKind
    :param tol: float
    :return: float
    """
    kind = LegKind(kind)
    size = v.xi_s if kind == LegKind.STABLE else v.xi_u
    other = v.xi_u if kind == LegKind.STABLE else v.xi_s
    if other != 0 or v.xi_c != 0:
        raise ValueError(f"dbeta along a {kind.name.lower()} leaf needs a purely {kind.name.lower()} vector, got {v}")
    if tc.is_constant or size == 0:
        return 0.0
    T = horizon(tc, kind, size, tol)
    if kind == LegKind.STABLE:
        return -tc.derivative_integral(x, v, _panel_end(x, T))
    return -tc.derivative_integral(x, v, _panel_end(x, -T))


def dbeta_s(tc, x, v, tol=1e-10):
    return dbeta(tc, x, v, LegKind.STABLE, tol)


def dbeta_u(tc, x, v, tol=1e-10):
    return dbeta(tc, x, v, LegKind.UNSTABLE, tol)


def lift(tc, x, v, kind, tol=1e-10):
    """
    L_x v = v - (d beta(x, v) / tau(x)) X: the tangent of the new leaf over v
    """
    d = dbeta(tc, x, v, kind, tol)
    return TangentVector(v.xi_s, v.xi_u, v.xi_c - d / tc.tau(x))


def lift_s(tc, x, v, tol=1e-10):
    return lift(tc, x, v, LegKind.STABLE, tol)


def lift_u(tc, x, v, tol=1e-10):
    return lift(tc, x, v, LegKind.UNSTABLE, tol)


def split_frame(tc, x, tol=1e-10):
    return SplitFrame(e_s_tilde=lift_s(tc, x, TangentVector(1.0, 0.0, 0.0), tol),
                      e_u_tilde=lift_u(tc, x, TangentVector(0.0, 1.0, 0.0), tol),
                      e_c=TangentVector(0.0, 0.0, 1.0))


def dflow_tau(tc, x, w, T, tol=1e-10):
    """
    Derivative of the time-changed flow: Dg_a w plus the alpha correction along X, a = alpha(x, T)
    :param tc: TimeChange
    :param x: PhasePoint
    :param w: TangentVector at x
    :param T: float
    :param tol: float
    :return: tuple (TangentVector at the image, image PhasePoint)
    """
    a = tc.alpha(x, T, tol).value
    y = tc.model.flow(x, a)
    moved = tc.model.dflow(x, w, a)
    center = (w.xi_c * tc.tau(x) - tc.derivative_integral(x, w, a)) / tc.tau(y)
    return TangentVector(moved.xi_s, moved.xi_u, center), y


def angle(v, w):
    a, b = v.as_array(), w.as_array()
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), abs(float(np.dot(a, b))))


def splitting_defect(tc, x, T, kind=LegKind.STABLE, tol=1e-12):
    """
    Angle between the image of the lifted leaf direction under Dg^tau_T and the lifted direction at the image
    """
    kind = LegKind(kind)
    unit = TangentVector(1.0, 0.0, 0.0) if kind == LegKind.STABLE else TangentVector(0.0, 1.0, 0.0)
    image, y = dflow_tau(tc, x, lift(tc, x, unit, kind, tol), T, tol)
    return angle(image, lift(tc, y, unit, kind, tol))


def comparability(tc, points, tol=1e-10):
    """
    Spread of ||L^s_x e_s|| over sample points against K = 1 + max|d beta| / tau_min
    :return: tuple (min ratio, max ratio, K_emp)
    """
    unit = TangentVector(1.0, 0.0, 0.0)
    dbs = np.array([dbeta_s(tc, x, unit, tol) for x in points])
    ratios = np.array([lift_s(tc, x, unit, tol).norm() for x in points])
    k_emp = 1.0 + float(np.max(np.abs(dbs), initial=0.0)) / tc.tau_min
    return float(ratios.min()), float(ratios.max()), k_emp


def separation(tc, x, kind, u, t, tol=1e-10):
    """
    Distance between g^tau_t x and g^tau_t Phi_x(y), y the (kind) leg image of x at parameter u,
    computed from the leg scale at alpha(x, t) and the remaining graph-time tail rather than by
    subtracting flowed coordinates
    :return: float
    """
    kind = LegKind(kind)
    model = tc.model
    a1 = tc.alpha(x, t, tol).value
    n1 = model.crossings(x, a1)
    offset = abs(u) * model.leg_scale(kind, n1)
    if tc.is_constant or u == 0:
        return offset
    rel = SEPARATION_RTOL
    span = math.log(max(tc.lipschitz(kind) / rel, 1.0)) / model.log_lam + 3.0
    if kind == LegKind.STABLE:
        tail, _ = leg_difference_integral(tc, x, kind, u, a1, a1 + span)
        remainder = -tail
    else:
        remainder, _ = leg_difference_integral(tc, x, kind, u, a1 - span, a1)
    y = model.leg(model.flow(x, a1), kind, u * model.leg_scale(kind, n1))
    return math.hypot(offset, remainder / tc.tau(y))


def contraction_rate(tc, x, u=1e-3, t_max=20.0, n_samples_along=40, kind=LegKind.STABLE, tol=1e-10):
    """
    Least-squares exponent of the separation of x and Phi_x(leg(x, u)) under g^tau over [1, t_max]
    (forward for stable legs, backward for unstable legs)
    :return: float, negative for a contracting leaf
    """
    if t_max < 10:
        raise ValueError(f"t_max must be at least 10, got {t_max}")
    if abs(u) > 1e-3:
        raise ValueError(f"Leg parameter must be at most 1e-3, got {u}")
    kind = LegKind(kind)
    sign = 1.0 if kind == LegKind.STABLE else -1.0
    times = np.linspace(1.0, t_max, n_samples_along)
    dists = np.array([separation(tc, x, kind, u, sign * t, tol) for t in times])
    if not np.all(np.isfinite(dists)) or np.any(dists <= 1e-300):
        raise DegenerateFitError(f"Separation reached the floating-point floor before t_max={t_max}")
    slope = np.polyfit(times, np.log(dists), 1)[0]
    logging.debug(f"Contraction rate at {x}: {slope}")
    return float(slope)
