import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

from utils.errors import NonLocalDistanceError

LOCAL_RADIUS = 0.25


class LegKind(str, Enum):
    STABLE = 's'
    UNSTABLE = 'u'


def _unit(x):
    x = x % 1.0
    # x % 1.0 rounds tiny negatives up to exactly 1.0
    return 0.0 if x >= 1.0 else x


def split_roof(total):
    """
    Crossing count and roof height of an absolute roof coordinate, with total - floor(total) kept below 1
    :param total: float, p.roof + t
    :return: tuple (int n, float roof in [0, 1))
    """
    n = math.floor(total)
    roof = total - n
    # a tiny negative total leaves 1.0 after subtracting floor = -1
    if roof >= 1.0:
        roof, n = 0.0, n + 1
    return n, roof


@dataclass(frozen=True)
class PhasePoint:
    """
    Point of the suspension manifold: base torus coordinates plus roof height in [0, 1)
    """
    base: tuple
    roof: float

    def __post_init__(self):
        object.__setattr__(self, 'base', (_unit(float(self.base[0])), _unit(float(self.base[1]))))
        object.__setattr__(self, 'roof', float(self.roof))
        if not 0.0 <= self.roof < 1.0:
            raise ValueError(f"Roof coordinate must lie in [0, 1), got {self.roof}")

    def to_dict(self):
        return {'base': list(self.base), 'roof': self.roof}

    @classmethod
    def from_dict(cls, record):
        return cls(base=tuple(record['base']), roof=record['roof'])


@dataclass(frozen=True)
class TangentVector:
    """
    Coefficients in the frame (stable eigendirection, unstable eigendirection, flow direction X)
    """
    xi_s: float = 0.0
    xi_u: float = 0.0
    xi_c: float = 0.0

    def as_array(self):
        return np.array([self.xi_s, self.xi_u, self.xi_c])

    def norm(self):
        return float(np.linalg.norm(self.as_array()))

    def __mul__(self, c):
        return TangentVector(c * self.xi_s, c * self.xi_u, c * self.xi_c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Panel:
    """
    Piece of an orbit segment with a single base point: roof runs over [lo, hi] after n signed crossings,
    t_lo is the flow time (relative to the orbit anchor) at roof = lo
    """
    base: np.ndarray
    lo: float
    hi: float
    n: int
    t_lo: float


class FlowModel(ABC):
    """
    Interface of a partially hyperbolic flow with one-dimensional stable, unstable and center bundles
    """

    @abstractmethod
    def flow(self, p, t):
        pass

    @abstractmethod
    def dflow(self, p, v, t):
        pass

    @abstractmethod
    def leg(self, p, kind, u):
        pass

    @abstractmethod
    def leg_scale(self, kind, n):
        pass

    @abstractmethod
    def dist(self, p, q, strict=False):
        pass

    @abstractmethod
    def sample(self, rng):
        pass

    @abstractmethod
    def panels(self, p, t0, t1):
        pass


class CatSuspensionModel(FlowModel):
    """
    Unit-roof suspension of the cat map A = [[2, 1], [1, 1]] on the two-torus,
    M = (T^2 x R) / ((b, s + 1) ~ (A b, s))
    """

    def __init__(self):
        self.A = np.array([[2, 1], [1, 1]], dtype=int)
        self.A_inv = np.array([[1, -1], [-1, 2]], dtype=int)
        self.lam = (3.0 + math.sqrt(5.0)) / 2.0
        self.log_lam = math.log(self.lam)
        eigval, eigvec = np.linalg.eigh(self.A.astype(float))
        # eigh sorts ascending: contracting direction first
        e_s, e_u = eigvec[:, 0], eigvec[:, 1]
        self.e_s = e_s if e_s[0] > 0 else -e_s
        self.e_u = e_u if e_u[0] > 0 else -e_u
        logging.debug(f"Cat suspension ready: lambda={self.lam}, e_s={self.e_s}, e_u={self.e_u}")

    def point(self, b1, b2, s=0.0):
        """
        Build a phase point from any roof value, normalising through the gluing
        :param b1: float, first base coordinate
        :param b2: float, second base coordinate
        :param s: float, roof value (any real)
        :return: PhasePoint
        """
        return self.flow(PhasePoint((b1, b2), 0.0), s)

    def _step(self, b, forward=True):
        m = self.A if forward else self.A_inv
        x = m[0, 0] * b[0] + m[0, 1] * b[1]
        y = m[1, 0] * b[0] + m[1, 1] * b[1]
        return _unit(x), _unit(y)

    def _apply(self, b, n):
        for _ in range(abs(n)):
            b = self._step(b, forward=n > 0)
        return b

    def flow(self, p, t):
        """
        Advance the roof by t, applying A to the base at every crossing of roof = 1
        :param p: PhasePoint
        :param t: float, flow time
        :return: PhasePoint
        """
        if t == 0:
            return p
        n, roof = split_roof(p.roof + t)
        return PhasePoint(self._apply(p.base, n), roof)

    def crossings(self, p, t):
        """
        Signed number of roof crossings along the orbit segment [0, t] from p, the count flow applies
        """
        return split_roof(p.roof + t)[0]

    def dflow(self, p, v, t):
        """
        Derivative cocycle Dg_t: stable coefficient shrinks by lambda per crossing, unstable grows, X is invariant
        :param p: PhasePoint
        :param v: TangentVector
        :param t: float
        :return: TangentVector at flow(p, t)
        """
        n = self.crossings(p, t)
        return TangentVector(v.xi_s * self.lam ** (-n), v.xi_u * self.lam ** n, v.xi_c)

    def direction(self, kind):
        return self.e_s if LegKind(kind) == LegKind.STABLE else self.e_u

    def leg(self, p, kind, u):
        """
        Move along the stable or unstable leaf of p by arc length u at fixed roof
        :param p: PhasePoint
        :param kind: LegKind or 's' / 'u'
        :param u: float, leg parameter
        :return: PhasePoint
        """
        if u == 0:
            return p
        e = self.direction(kind)
        return PhasePoint((p.base[0] + u * e[0], p.base[1] + u * e[1]), p.roof)

    def leg_s(self, p, u):
        return self.leg(p, LegKind.STABLE, u)

    def leg_u(self, p, u):
        return self.leg(p, LegKind.UNSTABLE, u)

    def leg_scale(self, kind, n):
        """
        Factor by which a leg parameter is carried after n signed roof crossings
        """
        return self.lam ** (-n) if LegKind(kind) == LegKind.STABLE else self.lam ** n

    def _representatives(self, q):
        b = np.array(q.base)
        charts = [(b, q.roof),
                  (np.array(self._step(q.base, True)), q.roof - 1.0),
                  (np.array(self._step(q.base, False)), q.roof + 1.0)]
        shifts = [np.array([i, j]) for i in (-1, 0, 1) for j in (-1, 0, 1)]
        for base, roof in charts:
            for shift in shifts:
                yield base + shift, roof

    def dist(self, p, q, strict=False):
        """
        Quotient metric: smallest Euclidean distance over nearby deck representatives of q
        :param p: PhasePoint
        :param q: PhasePoint
        :param strict: bool, raise instead of logging when no representative is local
        :return: float
        """
        bp = np.array(p.base)
        best = min(math.sqrt(float(np.sum((bp - base) ** 2)) + (p.roof - roof) ** 2)
                   for base, roof in self._representatives(q))
        if best > LOCAL_RADIUS:
            if strict:
                raise NonLocalDistanceError(f"Distance {best} exceeds the local radius {LOCAL_RADIUS}")
            logging.warning(f"Non-local distance {best} between {p} and {q}")
        return best

    def sample(self, rng):
        """
        Haar-uniform point: uniform base torus times uniform roof
        :param rng: numpy Generator
        :return: PhasePoint
        """
        b1, b2, s = rng.random(3)
        return PhasePoint((b1, b2), s)

    def sample_many(self, rng, n):
        return [self.sample(rng) for _ in range(n)]

    def sample_arrays(self, rng, n):
        """
        Haar samples as arrays, for vectorised observables
        :return: tuple (base array of shape (n, 2), roof array of shape (n,))
        """
        draws = rng.random((n, 3))
        return draws[:, :2], draws[:, 2]

    def panels(self, p, t0, t1):
        """
        Split the orbit segment [t0, t1] of p into pieces of constant base.
        Bases are generated outward from p so that rounding in A^n stays local to each side.
        :param p: PhasePoint
        :param t0: float, start time relative to p
        :param t1: float, end time relative to p
        :return: generator of Panel
        """
        if t1 <= t0:
            return
        if t0 < 0 < t1:
            yield from self.panels(p, t0, 0.0)
            yield from self.panels(p, 0.0, t1)
            return
        s = p.roof
        forward = t0 >= 0
        first, last = split_roof(s + t0)[0], math.ceil(s + t1) - 1
        indices = range(first, last + 1) if forward else range(last, first - 1, -1)
        b, n = p.base, 0
        for k in indices:
            while n != k:
                b = self._step(b, forward)
                n += 1 if forward else -1
            start, end = k - s, k + 1 - s
            lo_t, hi_t = max(t0, start), min(t1, end)
            if hi_t <= lo_t:
                continue
            lo = 0.0 if lo_t == start else min(max(s + lo_t - k, 0.0), 1.0)
            hi = 1.0 if hi_t == end else min(max(s + hi_t - k, 0.0), 1.0)
            yield Panel(np.array(b), lo, hi, k, lo_t)

    def norm(self, p, v):
        """
        Adapted norm, continuous across the gluing: the stable and unstable coefficients
        are weighted by lambda^-s and lambda^s at roof s, the flow direction is isometric
        :param p: PhasePoint
        :param v: TangentVector
        :return: float
        """
        s = p.roof
        return math.sqrt((v.xi_s * self.lam ** (-s)) ** 2 + (v.xi_u * self.lam ** s) ** 2 + v.xi_c ** 2)

    def uniform_constants(self):
        """
        Uniform partial hyperbolicity constants (a, b, A, B, C) of the suspension flow in the adapted norm
        """
        return 0.0, 0.0, self.log_lam, self.log_lam, 1.0

    def uniform_center_bunched(self):
        a, b, A, B, _ = self.uniform_constants()
        return a + b < A and a + b < B

    def fiber_path(self, p, r, max_leg=0.2):
        """
        Stable and unstable legs inside the torus fiber of p joining p to flow(p, r)
        :param p: PhasePoint
        :param r: int, number of roof periods
        :param max_leg: float, largest allowed leg parameter
        :return: list of (LegKind, u)
        """
        if int(r) != r:
            raise ValueError(f"Fiber paths need an integer period count, got {r}")
        target = np.array(self._apply(p.base, int(r)))
        delta = target - np.array(p.base)
        delta -= np.round(delta)
        coeffs = np.linalg.solve(np.column_stack([self.e_s, self.e_u]), delta)
        legs = []
        for kind, c in zip((LegKind.STABLE, LegKind.UNSTABLE), coeffs):
            pieces = max(1, math.ceil(abs(c) / max_leg))
            legs.extend((kind, c / pieces) for _ in range(pieces) if c != 0)
        return legs


cat_model = CatSuspensionModel()
