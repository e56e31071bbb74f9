import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from processing.flow_models import LegKind, PhasePoint
from processing.foliations import LeafPoint, beta
from utils.errors import PathEndpointError

MAX_LEG = 0.2
MAX_QUAD_SIZE = 0.1
CYCLE_TOL = 1e-10
ENGULF_GRID = tuple((u, v) for u in (-0.08, -0.05, -0.02, 0.02, 0.05, 0.08)
                    for v in (-0.08, -0.05, -0.02, 0.02, 0.05, 0.08))


@dataclass(frozen=True)
class SuLeg:
    kind: LegKind
    u: float

    def __post_init__(self):
        object.__setattr__(self, 'kind', LegKind(self.kind))
        object.__setattr__(self, 'u', float(self.u))
        if abs(self.u) > MAX_LEG:
            raise ValueError(f"Leg parameter {self.u} exceeds the locality bound {MAX_LEG}")


@dataclass(frozen=True)
class SuPath:
    """
    Start point plus an ordered list of stable and unstable legs
    """
    start: PhasePoint
    legs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'legs', tuple(self.legs))

    def vertices(self, model):
        """
        Vertices x_0, ..., x_n with x_{i+1} = leg(x_i, kind_i, u_i)
        """
        points = [self.start]
        for leg in self.legs:
            points.append(model.leg(points[-1], leg.kind, leg.u))
        return points

    def end(self, model):
        return self.vertices(model)[-1]

    def is_cycle(self, model):
        return model.dist(self.end(model), self.start) <= CYCLE_TOL

    def reverse(self, model):
        return SuPath(self.end(model), tuple(SuLeg(leg.kind, -leg.u) for leg in reversed(self.legs)))

    def concat(self, other, model):
        """
        Path followed by another path starting at its endpoint
        """
        gap = model.dist(self.end(model), other.start)
        if gap > CYCLE_TOL:
            raise PathEndpointError(f"Cannot concatenate: paths are {gap} apart")
        return SuPath(self.start, self.legs + other.legs)

    def to_dict(self):
        return {'start': self.start.to_dict(), 'legs': [{'kind': leg.kind.value, 'u': leg.u} for leg in self.legs]}

    @classmethod
    def from_dict(cls, record):
        return cls(PhasePoint.from_dict(record['start']), tuple(SuLeg(leg['kind'], leg['u']) for leg in record['legs']))


@dataclass(frozen=True)
class TransportedPath:
    """
    Image Phi_x(C): points[k] = g^tau_{-t_k}(x_k) with t_0 = 0 and slide_times = (t_1, ..., t_n)
    """
    points: tuple
    slide_times: tuple
    total_pcf: float

    @property
    def times(self):
        return (0.0,) + tuple(self.slide_times)


@dataclass
class EngulfCertificate:
    displacements: list
    both_signs: bool
    engulf_radius: float
    engulfed_interval: tuple
    boundary_clear: bool
    max_abs: float

    def to_dict(self):
        return {
            'displacements': [{'u': u, 'v': v, 'pcf': d} for (u, v), d in self.displacements],
            'both_signs': self.both_signs,
            'engulf_radius': self.engulf_radius,
            'engulfed_interval': list(self.engulfed_interval),
            'boundary_clear': self.boundary_clear,
            'max_abs': self.max_abs,
        }


@dataclass(frozen=True)
class Verdict:
    vanishing: bool
    cycle: object = None
    value: float = 0.0

    @property
    def kind(self):
        return 'vanishing' if self.vanishing else 'witnessed'


@dataclass(frozen=True)
class OrbitConnection:
    u: float
    v: float
    transported: TransportedPath
    residual: float


def pcf_leg(tc, x, leaf, tol=1e-8):
    """
    Periodic cycle functional of tau along one leg: beta^s for stable legs, beta^u for unstable legs
    :param tc: TimeChange
    :param x: PhasePoint
    :param leaf: LeafPoint anchored at x
    :param tol: float
    :return: float
    """
    return beta(tc, x, leaf, tol).value


def _leg_values(tc, path, tol):
    vertices = path.vertices(tc.model)
    values = [pcf_leg(tc, x, LeafPoint(x, leg.kind, leg.u), tol) for x, leg in zip(vertices, path.legs)]
    return vertices, values


def pcf_path(tc, path, tol=1e-8):
    """
    Sum of leg functionals along an su-path
    """
    return float(sum(_leg_values(tc, path, tol)[1]))


def transport(tc, path, tol=1e-8):
    """
    Slide each vertex back along the time-changed flow by the accumulated functional, giving an su-path of g^tau
    :return: TransportedPath
    """
    vertices, values = _leg_values(tc, path, tol)
    times = np.concatenate([[0.0], np.cumsum(values)])
    points = tuple(tc.flow_tau(x, -t, tol) if t else x for x, t in zip(vertices, times))
    return TransportedPath(points, tuple(float(t) for t in times[1:]), float(times[-1]))


def compose_transport(tc, path, tol=1e-8):
    """
    Leg-by-leg composition of graph maps at the slid points: with p_i = g_{a_i}(x_i), the leg from x_i
    is carried to p_i by the original flow and the next point is Phi_{p_i} of its image
    :return: list of PhasePoint
    """
    model = tc.model
    vertices = path.vertices(model)
    current, a = path.start, 0.0
    points = [current]
    for x, leg in zip(vertices, path.legs):
        carried = LeafPoint(current, leg.kind, leg.u * model.leg_scale(leg.kind, model.crossings(x, a)))
        b = beta(tc, current, carried, tol).value
        step = tc.alpha(carried.point(model), -b, tol).value
        current = model.flow(carried.point(model), step)
        a += step
        points.append(current)
    return points


def transported_leg_gaps(tc, path, transported, horizon=15.0, tol=1e-8):
    """
    Leaf-membership check of a transported path: each consecutive pair of transported points is flowed by
    +horizon (stable legs) or -horizon (unstable legs) under g^tau, and the ratio of their distance to the
    distance at time 0 is returned. Pairs on a common leaf of g^tau give ratios far below one
    :param tc: TimeChange
    :param path: SuPath that was transported
    :param transported: TransportedPath of that path
    :param horizon: float, time-changed flow time
    :param tol: float
    :return: list of float, one per leg
    """
    model = tc.model
    points = transported.points
    if len(points) != len(path.legs) + 1:
        raise PathEndpointError(f"Transported path has {len(points)} points for {len(path.legs)} legs")
    ratios = []
    for leg, a, b in zip(path.legs, points[:-1], points[1:]):
        now = model.dist(a, b)
        if leg.u == 0 or now == 0:
            ratios.append(0.0)
            continue
        t = horizon if leg.kind == LegKind.STABLE else -horizon
        later = model.dist(tc.flow_tau(a, t, tol), tc.flow_tau(b, t, tol))
        ratios.append(later / now)
    return ratios


def quad_cycle(x, u, v):
    """
    su-quadrilateral with legs (s, u), (u, v), (s, -u), (u, -v); closes exactly on the cat model
    """
    if abs(u) > MAX_QUAD_SIZE or abs(v) > MAX_QUAD_SIZE:
        raise ValueError(f"Quadrilateral sizes must be at most {MAX_QUAD_SIZE}, got ({u}, {v})")
    return SuPath(x, (SuLeg(LegKind.STABLE, u), SuLeg(LegKind.UNSTABLE, v),
                      SuLeg(LegKind.STABLE, -u), SuLeg(LegKind.UNSTABLE, -v)))


def random_path(model, rng, n_legs=4, max_leg=0.1):
    start = model.sample(rng)
    kinds = rng.integers(0, 2, n_legs)
    sizes = rng.uniform(-max_leg, max_leg, n_legs)
    return SuPath(start, tuple(SuLeg(LegKind.STABLE if k == 0 else LegKind.UNSTABLE, u)
                               for k, u in zip(kinds, sizes)))


def holonomy_displacement(tc, x, u, v, tol=1e-8):
    """
    Functional of the quadrilateral at x: its transported cycle ends at g^tau_{-result}(x)
    """
    return pcf_path(tc, quad_cycle(x, u, v), tol)


def engulf_sweep(tc, x, size_grid=ENGULF_GRID, tol=1e-8):
    """
    Quadrilateral displacements over a grid of sizes. Both signs mean the endpoints wrap around x
    along its g^tau orbit, so an orbit segment lies in the accessibility class of x.
    :return: EngulfCertificate
    """
    if len(size_grid) == 0:
        raise ValueError("Engulf grid must be nonempty")
    # legs at tol / 8 keep the summed error of a quadrilateral below tol
    disps = [((u, v), holonomy_displacement(tc, x, u, v, tol / 8)) for u, v in size_grid]
    values = np.array([d for _, d in disps])
    positive, negative = values[values > tol], values[values < -tol]
    both_signs = len(positive) > 0 and len(negative) > 0
    radius = min(float(positive.max()), float(-negative.min())) if both_signs else 0.0
    # endpoints reach g^tau_{-d}(x), so the covered tau-time interval is [-max d, -min d]
    interval = (float(-values.max()), float(-values.min()))
    edge = max(max(abs(u), abs(v)) for u, v in size_grid)
    boundary = [d for (u, v), d in disps if max(abs(u), abs(v)) == edge]
    boundary_clear = all(abs(d) > tol for d in boundary)
    logging.debug(f"Engulf sweep at {x}: both_signs={both_signs}, radius={radius}")
    return EngulfCertificate(disps, both_signs, radius, interval, boundary_clear, float(np.abs(values).max()))


def displacement_profile(tc, x, sizes, tol=1e-8):
    """
    Diagonal displacements d(s) = PCF(quad_cycle(x, s, s)) and their continuity proxy: the jump
    at half the step must stay within 1.5 C h / 2, C the largest measured slope
    :return: dict with sizes, displacements, C and the half-step check
    """
    sizes = np.asarray(sizes, dtype=float)
    disps = np.array([holonomy_displacement(tc, x, s, s, tol) for s in sizes])
    steps = np.diff(sizes)
    slopes = np.abs(np.diff(disps)) / steps
    c = float(slopes.max()) if len(slopes) else 0.0
    mids = (sizes[:-1] + sizes[1:]) / 2
    mid_disps = np.array([holonomy_displacement(tc, x, s, s, tol) for s in mids])
    half_jumps = np.abs(mid_disps - disps[:-1])
    ok = bool(np.all(half_jumps <= 1.5 * c * steps / 2 + 2 * tol))
    return {'sizes': sizes, 'displacements': disps, 'C': c, 'half_step_ok': ok,
            'max_half_jump': float(half_jumps.max()) if len(half_jumps) else 0.0}


def orbit_path(model, x, r):
    """
    su-path inside the torus fiber of x from x to g_r(x), r an integer
    """
    return SuPath(x, tuple(SuLeg(kind, u) for kind, u in model.fiber_path(x, r)))


def orbit_defect(tc, path, r, tol=1e-8):
    """
    D = PCF(path) - v(x, r) for an su-path from x ending at g_r(x)
    """
    target = tc.model.flow(path.start, r)
    gap = tc.model.dist(path.end(tc.model), target)
    if gap > CYCLE_TOL:
        raise PathEndpointError(f"Path ends {gap} away from g_{r}(x)")
    return pcf_path(tc, path, tol) - tc.v_cocycle(path.start, r, tol).value


def connect_orbit(tc, x, target, u_max=0.1, tol=1e-8):
    """
    Find a diagonal (or anti-diagonal) quadrilateral whose transported cycle ends at g^tau_target(x)
    :param tc: TimeChange
    :param x: PhasePoint
    :param target: float, tau-time along the orbit of x to reach
    :param u_max: float, largest quadrilateral size to search
    :param tol: float
    :return: OrbitConnection
    """
    for sign in (1.0, -1.0):
        f = lambda s: holonomy_displacement(tc, x, s, sign * s, tol) + target
        if target == 0 or f(u_max) * f(0.0) < 0:
            break
    else:
        raise ValueError(f"Orbit time {target} is outside the segment engulfed by sizes up to {u_max}")
    s = 0.0 if target == 0 else brentq(f, 0.0, u_max, xtol=1e-14)
    path = quad_cycle(x, s, sign * s)
    moved = transport(tc, path, tol)
    residual = tc.model.dist(moved.points[-1], tc.flow_tau(x, target, tol))
    logging.info(f"Connected x to g^tau_{target}(x) with quadrilateral size {s}, residual {residual}")
    return OrbitConnection(s, sign * s, moved, residual)


def quad_family(model, rng, n_anchors, sizes=(0.02, 0.05, 0.08)):
    """
    Quadrilaterals of every signed size pair at Haar-random anchors
    """
    family = []
    for _ in range(n_anchors):
        x = model.sample(rng)
        family.extend(quad_cycle(x, su * u, sv * v) for u in sizes for v in sizes
                      for su in (1, -1) for sv in (1, -1))
    return family


def coboundary_test(tc, cycle_family, tol=1e-6):
    """
    Vanishing of the functional over a family of cycles, or the first violating cycle
    :return: Verdict
    """
    if len(cycle_family) == 0:
        raise ValueError("Cycle family must be nonempty")
    for cycle in cycle_family:
        value = pcf_path(tc, cycle, min(tol, 1e-8))
        if abs(value) > tol:
            logging.info(f"Cycle functional witnessed: {value} at {cycle.start}")
            return Verdict(False, cycle, value)
    return Verdict(True)


def haar_average_pcf(tc, u, v, n_samples, rng, tol=1e-8):
    """
    Monte-Carlo mean of the quadrilateral functional over Haar-translated anchors (exact mean 0)
    :return: tuple (mean, stderr)
    """
    if n_samples < 1000:
        raise ValueError(f"Haar averages need at least 1000 samples, got {n_samples}")
    values = np.array([holonomy_displacement(tc, tc.model.sample(rng), u, v, tol) for _ in range(n_samples)])
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_samples))


def haar_average_orbit(tc, r, n_samples, rng, tol=1e-8):
    """
    Monte-Carlo mean of v(y, r) over Haar samples (exact mean r * tau_0)
    :return: tuple (mean, stderr)
    """
    if n_samples < 1000:
        raise ValueError(f"Haar averages need at least 1000 samples, got {n_samples}")
    values = np.array([tc.v_cocycle(tc.model.sample(rng), r, tol).value for _ in range(n_samples)])
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_samples))
