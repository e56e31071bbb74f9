import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from processing.flow_models import LegKind, cat_model
from processing.proc_helper import window_derivative, window_integral, window_mass, window_scalar, window_sup
from utils.errors import ConfigError, ToleranceError

BUMP_KEYS = {'eps', 'k', 'phase'}
COBOUNDARY_KEYS = {'amp', 'k', 'phase'}
SPEC_KEYS = {'c0', 'bumps', 'coboundary'}


def _strict_keys(record, allowed, where):
    if not isinstance(record, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(record).__name__}")
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise ConfigError(f"Unknown field '{unknown[0]}' in {where}")


def _frequency(k, where):
    if len(k) != 2 or any(int(c) != c for c in k):
        raise ConfigError(f"Frequency in {where} must be an integer pair, got {k}")
    return int(k[0]), int(k[1])


@dataclass(frozen=True)
class Bump:
    eps: float
    k: tuple = (1, 0)
    phase: float = 0.0


@dataclass(frozen=True)
class CoboundaryTerm:
    """
    Flow-direction derivative of amp * w(roof) * cos(2 pi k.base + phase)
    """
    amp: float
    k: tuple = (1, 0)
    phase: float = 0.0


@dataclass(frozen=True)
class TimeChangeSpec:
    """
    Smooth positive tau: c0 plus roof-windowed trigonometric bumps plus flow-direction coboundaries
    """
    c0: float = 1.0
    bumps: tuple = field(default_factory=tuple)
    coboundary: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'bumps', tuple(self.bumps))
        object.__setattr__(self, 'coboundary', tuple(self.coboundary))
        if not self.c0 > 0:
            raise ConfigError(f"c0 must be positive, got {self.c0}")
        if self.tau_min <= 0:
            raise ConfigError(f"Time change is not positive: tau_min = {self.tau_min}")

    @property
    def tau_min(self):
        return (self.c0 - sum(abs(b.eps) for b in self.bumps)
                - sum(abs(c.amp) for c in self.coboundary) * window_sup(1))

    @property
    def tau_max(self):
        return (self.c0 + sum(abs(b.eps) for b in self.bumps)
                + sum(abs(c.amp) for c in self.coboundary) * window_sup(1))

    @property
    def is_constant(self):
        return not any(b.eps for b in self.bumps) and not any(c.amp for c in self.coboundary)

    @classmethod
    def from_dict(cls, record):
        """
        Build a spec from its structured record, rejecting unknown fields
        :param record: dict with keys c0, bumps, coboundary
        :return: TimeChangeSpec
        """
        _strict_keys(record, SPEC_KEYS, 'tau')
        if 'c0' not in record:
            raise ConfigError("Missing field 'c0' in tau")
        bumps, cobs = [], []
        for i, b in enumerate(record.get('bumps') or []):
            _strict_keys(b, BUMP_KEYS, f'tau.bumps[{i}]')
            bumps.append(Bump(float(b['eps']), _frequency(b.get('k', (1, 0)), f'tau.bumps[{i}]'),
                              float(b.get('phase', 0.0))))
        for i, c in enumerate(record.get('coboundary') or []):
            _strict_keys(c, COBOUNDARY_KEYS, f'tau.coboundary[{i}]')
            cobs.append(CoboundaryTerm(float(c['amp']), _frequency(c.get('k', (1, 0)), f'tau.coboundary[{i}]'),
                                       float(c.get('phase', 0.0))))
        try:
            c0 = float(record['c0'])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid c0: {e}")
        return cls(c0=c0, bumps=tuple(bumps), coboundary=tuple(cobs))

    def to_dict(self):
        return {
            'c0': self.c0,
            'bumps': [{'eps': b.eps, 'k': list(b.k), 'phase': b.phase} for b in self.bumps],
            'coboundary': [{'amp': c.amp, 'k': list(c.k), 'phase': c.phase} for c in self.coboundary],
        }


@dataclass(frozen=True)
class CocycleValue:
    value: float
    err_bound: float


class TimeChange:
    """
    A smooth time change tau of a flow model: evaluates tau, its derivatives, the cocycles v and alpha,
    and the time-changed flow g^tau_t(x) = g_alpha(x, t)(x)
    """

    def __init__(self, spec, model=cat_model):
        self.spec = spec
        self.model = model
        terms = [(b.eps, b.k, b.phase, 0) for b in spec.bumps if b.eps] + \
                [(c.amp, c.k, c.phase, 1) for c in spec.coboundary if c.amp]
        self.coefs = np.array([t[0] for t in terms], dtype=float)
        self.freqs = np.array([t[1] for t in terms], dtype=float).reshape(-1, 2)
        self.phases = np.array([t[2] for t in terms], dtype=float)
        self.orders = np.array([t[3] for t in terms], dtype=int)
        self.tau_min = spec.tau_min
        self.tau_max = spec.tau_max
        # k . e along the stable and unstable directions, per term
        self.k_s = self.freqs @ model.e_s
        self.k_u = self.freqs @ model.e_u
        self.sups = np.array([window_sup(int(o)) for o in self.orders])
        logging.debug(f"Time change with {len(terms)} terms, tau in [{self.tau_min}, {self.tau_max}]")

    @property
    def is_constant(self):
        return len(self.coefs) == 0

    def tau_bounds(self):
        return self.tau_min, self.tau_max

    def _phase(self, base):
        return 2 * np.pi * (self.freqs @ np.asarray(base, dtype=float)) + self.phases

    def _windows(self, roof, shift=0):
        return np.array([window_derivative(roof, o + shift) for o in self.orders], dtype=float)

    def _integrals(self, lo, hi):
        """
        Per-term window integrals over one panel, with summed error estimate
        """
        vals, err = np.empty(len(self.orders)), 0.0
        for i, o in enumerate(self.orders):
            vals[i], e = window_integral(int(o), lo, hi)
            err += abs(self.coefs[i]) * e
        return vals, err

    def lipschitz(self, kind):
        """
        Bound on |d tau| along the stable ('s') or unstable ('u') base direction
        """
        k_dir = self.k_s if LegKind(kind) == LegKind.STABLE else self.k_u
        return float(np.sum(np.abs(self.coefs) * self.sups * 2 * np.pi * np.abs(k_dir)))

    def tau(self, p):
        """
        Evaluate tau at a phase point
        :param p: PhasePoint
        :return: float
        """
        if self.is_constant:
            return self.spec.c0
        return float(self.spec.c0 + np.sum(self.coefs * self._windows(p.roof) * np.cos(self._phase(p.base))))

    def tau_values(self, base, roof):
        """
        Vectorised tau over arrays of base (n, 2) and roof (n,)
        """
        base, roof = np.asarray(base, dtype=float), np.asarray(roof, dtype=float)
        out = np.full(roof.shape, self.spec.c0)
        for c, k, ph, o in zip(self.coefs, self.freqs, self.phases, self.orders):
            out += c * window_derivative(roof, o) * np.cos(2 * np.pi * (base @ k) + ph)
        return out

    def dtau(self, p, v):
        """
        Directional derivative of tau along a tangent vector
        :param p: PhasePoint
        :param v: TangentVector
        :return: float
        """
        if self.is_constant:
            return 0.0
        theta = self._phase(p.base)
        along_base = -2 * np.pi * (v.xi_s * self.k_s + v.xi_u * self.k_u) * np.sin(theta) * self._windows(p.roof)
        along_flow = v.xi_c * np.cos(theta) * self._windows(p.roof, shift=1)
        return float(np.sum(self.coefs * (along_base + along_flow)))

    def xi(self, p):
        """
        Transfer function of the coboundary part: tau - c0 - bumps is the flow derivative of xi
        """
        w = window_scalar(p.roof)
        total = 0.0
        for c in self.spec.coboundary:
            total += c.amp * w * math.cos(2 * math.pi * (c.k[0] * p.base[0] + c.k[1] * p.base[1]) + c.phase)
        return total

    def panel_integral(self, panel, lo=None, hi=None):
        """
        Integral of tau along one panel, optionally restricted to roof values [lo, hi]
        :return: tuple (value, error estimate)
        """
        lo = panel.lo if lo is None else lo
        hi = panel.hi if hi is None else hi
        value = self.spec.c0 * (hi - lo)
        if self.is_constant:
            return value, 0.0
        integrals, err = self._integrals(lo, hi)
        return value + float(np.sum(self.coefs * np.cos(self._phase(panel.base)) * integrals)), err

    def v_cocycle(self, p, t, tol=1e-10):
        """
        v(p, t): integral of tau along the orbit segment [0, t], crossing-aware panel by panel
        :param p: PhasePoint
        :param t: float
        :param tol: float, allowed error bound
        :return: CocycleValue
        """
        if tol <= 0:
            raise ValueError(f"Tolerance must be positive, got {tol}")
        if t == 0:
            return CocycleValue(0.0, 0.0)
        total, err = 0.0, 0.0
        for panel in self.model.panels(p, min(t, 0.0), max(t, 0.0)):
            value, e = self.panel_integral(panel)
            total += value
            err += e
        if err > tol:
            raise ToleranceError(f"Quadrature error {err} above tolerance {tol} for v(p, {t})")
        return CocycleValue(total if t > 0 else -total, err)

    def alpha(self, p, t, tol=1e-10):
        """
        alpha(p, t): the original time at which v reaches t. Panels are marched outward up to the
        positivity bound |t| / tau_min, the root inside the last panel is polished with brentq
        :param p: PhasePoint
        :param t: float
        :param tol: float, allowed error on |v(p, alpha) - t|
        :return: CocycleValue
        """
        if tol <= 0:
            raise ValueError(f"Tolerance must be positive, got {tol}")
        if t == 0:
            return CocycleValue(0.0, 0.0)
        if self.is_constant:
            return CocycleValue(t / self.spec.c0, 0.0)
        target = abs(t)
        bound = target / self.tau_min * (1 + 1e-9) + 1e-9
        forward = t > 0
        acc, err = 0.0, 0.0
        panels = self.model.panels(p, 0.0, bound) if forward else self.model.panels(p, -bound, 0.0)
        for panel in panels:
            value, e = self.panel_integral(panel)
            err += e
            if acc + value < target:
                acc += value
                continue
            if forward:
                f = lambda r: acc + self.panel_integral(panel, hi=r)[0] - target
            else:
                f = lambda r: acc + self.panel_integral(panel, lo=r)[0] - target
            lo_val, hi_val = (f(panel.lo), f(panel.hi)) if forward else (f(panel.hi), f(panel.lo))
            if lo_val >= 0:
                r = panel.lo if forward else panel.hi
            elif hi_val <= 0:
                r = panel.hi if forward else panel.lo
            else:
                r = brentq(f, panel.lo, panel.hi, xtol=min(tol, 1e-13) / self.tau_max, rtol=4 * np.finfo(float).eps)
            time = panel.t_lo + (r - panel.lo)
            residual = abs(f(r))
            err += residual
            if err > tol:
                raise ToleranceError(f"alpha(p, {t}) residual {err} above tolerance {tol}")
            return CocycleValue(time, err)
        raise ToleranceError(f"alpha(p, {t}) not bracketed within {bound}")

    def flow_tau(self, p, t, tol=1e-10):
        """
        Time-changed flow g^tau_t(p)
        """
        return self.model.flow(p, self.alpha(p, t, tol).value)

    def tau_mean(self):
        """
        Haar mean of tau: only frequency-zero bumps survive, coboundaries integrate to zero
        :return: tuple (value, error estimate)
        """
        mass, err = window_mass()
        value, total_err = self.spec.c0, 0.0
        for b in self.spec.bumps:
            if tuple(b.k) == (0, 0):
                value += b.eps * math.cos(b.phase) * mass
                total_err += abs(b.eps) * err
        return value, total_err

    def density(self, p):
        """
        Density of the invariant probability m^tau with respect to Haar measure
        """
        return self.tau(p) / self.tau_mean()[0]

    def density_values(self, base, roof):
        return self.tau_values(base, roof) / self.tau_mean()[0]

    def conjugacy(self, p):
        """
        For tau = c0 + X xi, h(p) = g_{xi(p)/c0}(p) carries g^tau to the constant-speed flow g_{t/c0}
        """
        return self.model.flow(p, self.xi(p) / self.spec.c0)

    def flow_kappa(self, p, t):
        return self.model.flow(p, t / self.spec.c0)

    def derivative_integral(self, p, v, t):
        """
        Integral over [0, t] of the base-direction derivative of tau along Dg_r v, panel by panel
        :param p: PhasePoint
        :param v: TangentVector, only the stable and unstable coefficients are used
        :param t: float
        :return: float
        """
        if self.is_constant or t == 0 or (v.xi_s == 0 and v.xi_u == 0):
            return 0.0
        lam = self.model.lam
        total = 0.0
        for panel in self.model.panels(p, min(t, 0.0), max(t, 0.0)):
            direction = v.xi_s * lam ** (-panel.n) * self.k_s + v.xi_u * lam ** panel.n * self.k_u
            integrals, _ = self._integrals(panel.lo, panel.hi)
            total += float(np.sum(self.coefs * -2 * np.pi * direction * np.sin(self._phase(panel.base)) * integrals))
        return total if t > 0 else -total


def tau_from_preset(name, presets):
    """
    Resolve a preset name from the presets mapping into a TimeChangeSpec
    :param name: str, preset name
    :param presets: dict of records
    :return: TimeChangeSpec
    """
    if name not in presets:
        raise ConfigError(f"Unknown tau preset '{name}', available: {sorted(presets)}")
    return TimeChangeSpec.from_dict(presets[name])
