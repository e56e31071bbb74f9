import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import quad

from processing.flow_models import LegKind, PhasePoint, TangentVector
from processing.foliations import dflow_tau, lift
from processing.proc_helper import QUAD_EPSABS, QUAD_EPSREL, observables

RATE_COLUMNS = ['x_id', 'nu', 'nu_hat', 'gamma', 'gamma_hat', 'alpha_xT']
SERIES_COLUMNS = ['t', 'value', 'stderr']
LINKAGE_RTOL = 0.1


@dataclass
class RateReport:
    """
    Finite-time factors of g^tau_T at a point, measured in the adapted norm
    """
    nu: float
    nu_hat: float
    gamma: float
    gamma_hat: float
    alpha_xT: float
    T: float = 0.0
    log_lam: float = 0.0

    @property
    def bunched(self):
        return self.nu < self.gamma * self.gamma_hat and self.nu_hat < self.gamma * self.gamma_hat

    @property
    def chain(self):
        # one-dimensional center: gamma equals 1 / gamma_hat, so the middle link is an equality
        upper = 1.0 / self.gamma_hat
        return (self.nu < 1 and self.nu_hat < 1 and self.nu < self.gamma <= upper * (1 + 1e-12)
                and upper < 1.0 / self.nu_hat and upper < 1.0 / self.nu)

    @property
    def linkage_error(self):
        """
        Relative gap between log nu and -log(lambda) alpha(x, T)
        """
        expected = -self.log_lam * self.alpha_xT
        return abs(np.log(self.nu) - expected) / abs(expected)


@dataclass
class BunchingReport:
    reports: list
    T: float
    marginal: bool

    @property
    def pass_fraction(self):
        return float(np.mean([r.bunched for r in self.reports]))

    @property
    def chain_fraction(self):
        return float(np.mean([r.chain for r in self.reports]))

    def linkage_fraction(self, rtol=LINKAGE_RTOL):
        return float(np.mean([r.linkage_error <= rtol for r in self.reports]))


@dataclass
class CorrelationSeries:
    times: list
    values: list
    stderr: list
    mean_f: float
    mean_g: float
    variance: float = 0.0
    variance_stderr: float = 0.0

    def to_frame(self):
        return pd.DataFrame({'t': self.times, 'value': self.values, 'stderr': self.stderr}, columns=SERIES_COLUMNS)


def finite_time_rates(tc, x, T, tol=1e-10):
    """
    Stable contraction nu, reciprocal unstable expansion nu_hat and center factors of g^tau_T at x
    :param tc: TimeChange
    :param x: PhasePoint
    :param T: float, horizon (>= 1)
    :param tol: float
    :return: RateReport
    """
    if T < 1:
        raise ValueError(f"Rate horizon must be at least 1, got {T}")
    model = tc.model
    es = lift(tc, x, TangentVector(1.0, 0.0, 0.0), LegKind.STABLE, tol)
    eu = lift(tc, x, TangentVector(0.0, 1.0, 0.0), LegKind.UNSTABLE, tol)
    img_s, y = dflow_tau(tc, x, es, T, tol)
    img_u, _ = dflow_tau(tc, x, eu, T, tol)
    nu = model.norm(y, img_s) / model.norm(x, es)
    nu_hat = model.norm(x, eu) / model.norm(y, img_u)
    gamma = tc.tau(x) / tc.tau(y)
    alpha_xT = tc.alpha(x, T, tol).value
    return RateReport(nu, nu_hat, gamma, 1.0 / gamma, alpha_xT, T, model.log_lam)


def center_bunching_check(tc, n_samples, T, rng, tol=1e-10):
    """
    Pointwise partial hyperbolicity and center bunching of g^tau_T over Haar samples
    :return: BunchingReport
    """
    marginal = T < 5
    if marginal:
        logging.warning(f"Horizon T={T} is marginal, bunching results are reported but not meaningful")
    points = tc.model.sample_many(rng, n_samples)
    reports = [finite_time_rates(tc, x, T, tol) for x in points]
    report = BunchingReport(reports, T, marginal)
    logging.info(f"Center bunching at T={T}: pass fraction {report.pass_fraction}")
    return report


def rate_table(reports):
    """
    Rate reports as a data frame with the exported column layout
    """
    rows = [[i, r.nu, r.nu_hat, r.gamma, r.gamma_hat, r.alpha_xT] for i, r in enumerate(reports)]
    return pd.DataFrame(rows, columns=RATE_COLUMNS)


def _observable(name):
    if name not in observables:
        raise ValueError(f"Unknown observable '{name}', available: {sorted(observables)}")
    return observables[name]


def _flow_many(tc, base, roof, t, tol):
    moved = [tc.flow_tau(PhasePoint(tuple(b), s), t, tol) for b, s in zip(base, roof)]
    return np.array([p.base for p in moved]), np.array([p.roof for p in moved])


def _estimate(weights, f_vals, g_vals):
    n = len(weights)
    product = weights * f_vals * g_vals
    mean_f = float(np.mean(weights * f_vals))
    mean_g = float(np.mean(weights * g_vals))
    value = float(np.mean(product)) - mean_f * mean_g
    return value, float(np.std(product, ddof=1) / np.sqrt(n)), mean_f, mean_g


def correlation(tc, f, g, t, n_samples, rng, tol=1e-10):
    """
    Monte-Carlo estimate of the integral of f * (g o g^tau_t) against m^tau minus the product of means,
    with Haar samples reweighted by the density tau / tau_0
    :return: tuple (value, stderr)
    """
    f_obs, g_obs = _observable(f), _observable(g)
    base, roof = tc.model.sample_arrays(rng, n_samples)
    weights = tc.density_values(base, roof)
    moved_base, moved_roof = _flow_many(tc, base, roof, t, tol) if t else (base, roof)
    value, err, _, _ = _estimate(weights, f_obs(base, roof), g_obs(moved_base, moved_roof))
    return value, err


def mixing_profile(tc, f, g, times, n_samples, rng, tol=1e-10):
    """
    Correlations at increasing times on one fixed sample set, each time reached by flowing from the previous one
    :return: CorrelationSeries
    """
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("Times must be strictly increasing")
    f_obs, g_obs = _observable(f), _observable(g)
    base, roof = tc.model.sample_arrays(rng, n_samples)
    weights = tc.density_values(base, roof)
    f_vals = f_obs(base, roof)
    variance, variance_err, _, _ = _estimate(weights, f_vals, f_vals)
    values, errs = [], []
    mean_f = mean_g = 0.0
    moved_base, moved_roof, now = base, roof, 0.0
    for t in times:
        if t != now:
            moved_base, moved_roof = _flow_many(tc, moved_base, moved_roof, t - now, tol)
            now = t
        value, err, mean_f, mean_g = _estimate(weights, f_vals, g_obs(moved_base, moved_roof))
        values.append(value)
        errs.append(err)
        logging.debug(f"Correlation at t={t}: {value} +/- {err}")
    return CorrelationSeries(times, values, errs, mean_f, mean_g, variance, variance_err)


def birkhoff_average(tc, f, x, T_budget, tol=1e-10):
    """
    Time average of f along g^tau over [0, T_budget], integrated panel by panel in original time
    with the weight tau
    :return: float
    """
    if T_budget < 100:
        raise ValueError(f"Birkhoff budget must be at least 100, got {T_budget}")
    f_obs = _observable(f)
    end = tc.alpha(x, T_budget, tol).value
    total = 0.0
    for panel in tc.model.panels(x, 0.0, end):
        base = panel.base[None, :]

        def integrand(s):
            roof = np.array([s])
            return float(f_obs(base, roof)[0] * tc.tau_values(base, roof)[0])

        value, _ = quad(integrand, panel.lo, panel.hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        total += value
    return total / T_budget


def density_normalization(tc, n_samples, rng):
    """
    Monte-Carlo mean of the density over Haar samples (exactly 1)
    :return: tuple (mean, stderr)
    """
    base, roof = tc.model.sample_arrays(rng, n_samples)
    values = tc.density_values(base, roof)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_samples))
