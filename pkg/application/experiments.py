import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from processing.analysis import birkhoff_average, center_bunching_check, density_normalization, mixing_profile, \
    rate_table
from processing.flow_models import LegKind, TangentVector
from processing.foliations import LeafPoint, beta, comparability, contraction_rate, dbeta_s, slide_time, \
    splitting_defect
from processing.su_paths import ENGULF_GRID, coboundary_test, compose_transport, connect_orbit, displacement_profile, \
    engulf_sweep, haar_average_orbit, haar_average_pcf, pcf_leg, pcf_path, quad_cycle, quad_family, random_path, \
    transport, transported_leg_gaps
from validation.certificate import check_ge, check_le

COCYCLE_BOUND = 1e-8
ANGLE_BOUND = 1e-5
GRADIENT_BOUND = 1e-6
TRANSPORT_BOUND = 1e-7
LEAF_RATIO_BOUND = 1e-2
CONSTANT_PCF_BOUND = 1e-10
WITNESS_BOUND = 1e-4
COBOUNDARY_TOL = 1e-6
CONJUGACY_BOUND = 1e-6
PCF_TOL = 1e-8
SPLITTING_TIMES = (1.0, 2.0, 5.0, 10.0)
RATES_T = 10.0
MIXING_DECAY = 0.2
PROFILE_SIZES = (0.01, 0.02, 0.04, 0.06, 0.08)
BIRKHOFF_BUDGET = 100.0
# absolute floor added to 3-sigma bands so that zero-variance controls compare cleanly
BAND_FLOOR = 1e-9


@dataclass
class ExperimentContext:
    config: object
    tc: object
    rng: np.random.Generator

    @property
    def model(self):
        return self.tc.model


@dataclass
class ExperimentResult:
    metrics: list
    data: pd.DataFrame
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    description: str
    fields: tuple
    run: object


def run_identities(ctx):
    """
    alpha cocycle law, the v / alpha inverse pair, positivity bounds and the g^tau group law
    """
    tc, model, tol = ctx.tc, ctx.model, ctx.config.tol
    rows = []
    for i in range(ctx.config.samples):
        p = model.sample(ctx.rng)
        t, u = ctx.rng.uniform(-5.0, 5.0, 2)
        a_tu = tc.alpha(p, t + u, tol).value
        a_u = tc.alpha(p, u, tol).value
        q = model.flow(p, a_u)
        a_t = tc.alpha(q, t, tol).value
        a_p = tc.alpha(p, t, tol).value
        lo, hi = sorted((t / tc.tau_max, t / tc.tau_min))
        rows.append({
            'x_id': i, 't': t, 'u': u,
            'cocycle': abs(a_tu - a_u - a_t),
            'v_of_alpha': abs(tc.v_cocycle(p, a_p, tol).value - t),
            'alpha_of_v': abs(tc.alpha(p, tc.v_cocycle(p, t, tol).value, tol).value - t),
            'positivity': int(not lo - 1e-12 <= a_p <= hi + 1e-12),
            'group_law': model.dist(model.flow(q, a_t), model.flow(p, a_tu)),
        })
    data = pd.DataFrame(rows)
    metrics = [check_le('alpha_cocycle_max', data['cocycle'].max(), COCYCLE_BOUND),
               check_le('v_alpha_inverse_max', data['v_of_alpha'].max(), COCYCLE_BOUND),
               check_le('alpha_v_inverse_max', data['alpha_of_v'].max(), COCYCLE_BOUND),
               check_le('positivity_violations', data['positivity'].sum(), 0),
               check_le('flow_tau_group_law_max', data['group_law'].max(), COCYCLE_BOUND)]
    return ExperimentResult(metrics, data)


def run_foliation(ctx):
    """
    Contraction along the new stable leaves, invariance of the lifted splitting, comparability,
    the derivative oracle for beta and the graph-time identity
    """
    tc, model, tol = ctx.tc, ctx.model, ctx.config.tol
    points = model.sample_many(ctx.rng, ctx.config.samples)
    unit = TangentVector(1.0, 0.0, 0.0)
    h = 1e-5
    rows = []
    for i, x in enumerate(points):
        row = {'x_id': i, 'rate': contraction_rate(tc, x, 1e-3, max(ctx.config.t_max, 10.0), tol=tol)}
        for T in SPLITTING_TIMES:
            row[f'angle_T{int(T)}'] = splitting_defect(tc, x, T, LegKind.STABLE, min(tol, 1e-12))
        fd = (beta(tc, x, LeafPoint(x, LegKind.STABLE, h), 1e-13).value
              - beta(tc, x, LeafPoint(x, LegKind.STABLE, -h), 1e-13).value) / (2 * h)
        row['gradient_gap'] = abs(dbeta_s(tc, x, unit, 1e-12) - fd)
        leaf = LeafPoint(x, LegKind.STABLE, 0.05)
        T_slide, b = slide_time(tc, x, leaf, tol)
        row['graph_residual'] = abs(tc.v_cocycle(leaf.point(model), T_slide, tol).value + b)
        rows.append(row)
    data = pd.DataFrame(rows)
    lo, hi, k_emp = comparability(tc, points, tol)
    rate_bound = -0.7 * model.log_lam / tc.tau_max
    metrics = [check_le('contraction_rate_max', data['rate'].max(), rate_bound)]
    if tc.is_constant:
        expected = -model.log_lam / tc.spec.c0
        metrics.append(check_le('constant_rate_relative_gap',
                                (data['rate'] - expected).abs().max() / abs(expected), 0.05))
    for T in SPLITTING_TIMES:
        metrics.append(check_le(f'splitting_angle_T{int(T)}_max', data[f'angle_T{int(T)}'].max(), ANGLE_BOUND))
    metrics += [check_le('comparability_max_ratio', hi, k_emp),
                check_ge('comparability_min_ratio', lo, 1.0 / k_emp),
                check_le('dbeta_gradient_gap_max', data['gradient_gap'].max(), GRADIENT_BOUND),
                check_le('graph_time_residual_max', data['graph_residual'].max(), 10 * tol)]
    return ExperimentResult(metrics, data, {'K_emp': k_emp})


def run_rates(ctx):
    """
    Pointwise partial hyperbolicity and center bunching of g^tau_T at T = 10
    """
    tc, tol = ctx.tc, ctx.config.tol
    report = center_bunching_check(tc, ctx.config.samples, RATES_T, ctx.rng, tol)
    data = rate_table(report.reports)
    metrics = [check_ge('center_bunching_fraction', report.pass_fraction, 1.0),
               check_ge('partial_hyperbolicity_chain_fraction', report.chain_fraction, 1.0),
               check_ge('exponent_linkage_fraction', report.linkage_fraction(), 1.0)]
    return ExperimentResult(metrics, data, {'T': RATES_T, 'marginal': report.marginal})


def run_pcf(ctx):
    """
    Transport of random su-paths against leg-by-leg composition, leaf membership of transported legs,
    leg antisymmetry and the closed-quadrilateral endpoint law
    """
    tc, model, tol = ctx.tc, ctx.model, ctx.config.tol
    rows = []
    for i in range(min(ctx.config.samples, 50)):
        path = random_path(model, ctx.rng)
        moved = transport(tc, path, PCF_TOL)
        composed = compose_transport(tc, path, PCF_TOL)
        gaps = [model.dist(a, b) for a, b in zip(moved.points, composed)]
        endpoint = model.dist(moved.points[-1], tc.flow_tau(path.end(model), -moved.total_pcf, tol))
        ratios = transported_leg_gaps(tc, path, moved, 15.0, PCF_TOL)
        x, first = path.start, path.legs[0]
        x1 = model.leg(x, first.kind, first.u)
        antisymmetry = abs(pcf_leg(tc, x, LeafPoint(x, first.kind, first.u), PCF_TOL)
                           + pcf_leg(tc, x1, LeafPoint(x1, first.kind, -first.u), PCF_TOL))
        cycle = quad_cycle(x, 0.05, 0.05)
        cycle_moved = transport(tc, cycle, PCF_TOL)
        closing = model.dist(cycle_moved.points[-1], tc.flow_tau(x, -cycle_moved.total_pcf, tol))
        rows.append({'path_id': i, 'pcf': moved.total_pcf, 'compose_gap': max(gaps), 'endpoint_gap': endpoint,
                     'max_leaf_ratio': max(ratios), 'antisymmetry': antisymmetry,
                     'quad_pcf': cycle_moved.total_pcf, 'quad_closing_gap': closing})
    data = pd.DataFrame(rows)
    metrics = [check_le('compose_vs_transport_max', data['compose_gap'].max(), TRANSPORT_BOUND),
               check_le('transport_endpoint_max', data['endpoint_gap'].max(), TRANSPORT_BOUND),
               check_le('quad_endpoint_max', data['quad_closing_gap'].max(), TRANSPORT_BOUND),
               check_le('leaf_membership_ratio_max', data['max_leaf_ratio'].max(), LEAF_RATIO_BOUND),
               check_le('leg_antisymmetry_max', data['antisymmetry'].max(), 2 * PCF_TOL)]
    if tc.is_constant:
        largest = max(data['pcf'].abs().max(), data['quad_pcf'].abs().max())
        metrics.append(check_le('constant_pcf_max', largest, CONSTANT_PCF_BOUND))
    return ExperimentResult(metrics, data)


def run_access(ctx):
    """
    Engulfing sweep of quadrilateral displacements at sampled anchors, plus an explicit orbit connection
    at the first anchor where both signs occur
    """
    tc, model, tol = ctx.tc, ctx.model, ctx.config.tol
    rows, witness, largest = [], None, 0.0
    for i in range(min(ctx.config.samples, 20)):
        x = model.sample(ctx.rng)
        certificate = engulf_sweep(tc, x, ENGULF_GRID, PCF_TOL)
        rows.extend({'anchor_id': i, 'u': u, 'v': v, 'pcf': d} for (u, v), d in certificate.displacements)
        largest = max(largest, certificate.max_abs)
        if witness is None and certificate.both_signs:
            witness = (i, x, certificate)
    data = pd.DataFrame(rows, columns=['anchor_id', 'u', 'v', 'pcf'])
    metrics = [check_ge('both_signs_anchor_found', 0 if witness is None else 1, 1),
               check_ge('max_abs_pcf', largest, WITNESS_BOUND)]
    details = {'both_signs': witness is not None}
    if witness is not None:
        i, x, certificate = witness
        target = -0.5 * dict(certificate.displacements)[(0.08, 0.08)]
        connection = connect_orbit(tc, x, target, 0.08, PCF_TOL)
        metrics.append(check_le('orbit_connection_residual', connection.residual, TRANSPORT_BOUND))
        details.update({'anchor_id': i, 'anchor': x.to_dict(), 'engulf_radius': certificate.engulf_radius,
                        'engulfed_interval': list(certificate.engulfed_interval),
                        'boundary_clear': certificate.boundary_clear, 'connection_size': connection.u,
                        'diagonal_profile': displacement_profile(tc, x, PROFILE_SIZES, PCF_TOL)})
    return ExperimentResult(metrics, data, details)


def run_averages(ctx):
    """
    Haar averages: quadrilateral functional has mean zero, orbit integrals have mean r * tau_0,
    the invariant density has mean one
    """
    tc, tol = ctx.tc, ctx.config.tol
    n = max(ctx.config.samples, 1000)
    tau0, _ = tc.tau_mean()
    rows, metrics = [], []
    mean, se = haar_average_pcf(tc, 0.05, 0.05, n, ctx.rng, PCF_TOL)
    rows.append({'quantity': 'pcf_quad_0.05', 'mean': mean, 'stderr': se, 'expected': 0.0})
    metrics.append(check_le('pcf_mean_abs', abs(mean), 3 * se + BAND_FLOOR))
    for r in (1, 3):
        mean, se = haar_average_orbit(tc, r, n, ctx.rng, tol)
        rows.append({'quantity': f'orbit_integral_r{r}', 'mean': mean, 'stderr': se, 'expected': r * tau0})
        metrics.append(check_le(f'orbit_integral_r{r}_gap', abs(mean - r * tau0), 3 * se + BAND_FLOOR))
    mean, se = density_normalization(tc, n, ctx.rng)
    rows.append({'quantity': 'density', 'mean': mean, 'stderr': se, 'expected': 1.0})
    metrics.append(check_le('density_mean_gap', abs(mean - 1.0), 3 * se + BAND_FLOOR))
    # single-orbit time average, reported only
    birkhoff = birkhoff_average(tc, 'cos_base1', ctx.model.sample(ctx.rng), BIRKHOFF_BUDGET, tol)
    rows.append({'quantity': 'birkhoff_cos_base1', 'mean': birkhoff, 'stderr': np.nan, 'expected': np.nan})
    return ExperimentResult(metrics, pd.DataFrame(rows), {'tau0': tau0})


def run_mixing(ctx):
    """
    Correlation of cos(2 pi roof) with itself: no decay at multiples of c0 for a constant time change,
    decay below a fifth of the variance by t_max otherwise
    """
    tc, tol, t_max = ctx.tc, ctx.config.tol, ctx.config.t_max
    if tc.is_constant:
        c0 = tc.spec.c0
        times = [k * c0 for k in range(int(t_max // c0) + 1)]
    else:
        times = [t_max * k / 4 for k in range(5)]
    series = mixing_profile(tc, 'cos_roof', 'cos_roof', times, ctx.config.samples, ctx.rng, tol)
    data = series.to_frame()
    if tc.is_constant:
        excess = max(abs(v - series.variance) - 3 * e for v, e in zip(series.values, series.stderr))
        metrics = [check_le('periodic_correlation_excess', excess, BAND_FLOOR)]
    else:
        metrics = [check_le('correlation_at_t_max', abs(series.values[-1]),
                            MIXING_DECAY * series.variance + 3 * series.stderr[-1])]
    return ExperimentResult(metrics, data, {'variance': series.variance})


def run_coboundary(ctx):
    """
    Functional over a family of quadrilaterals: vanishing plus a conjugacy check when tau is a constant
    plus a coboundary, a witness otherwise
    """
    tc, model, tol = ctx.tc, ctx.model, ctx.config.tol
    family = quad_family(model, ctx.rng, min(ctx.config.samples, 10))
    values = [pcf_path(tc, cycle, PCF_TOL) for cycle in family]
    data = pd.DataFrame({'cycle_id': range(len(family)), 'u': [c.legs[0].u for c in family],
                         'v': [c.legs[1].u for c in family], 'pcf': values})
    verdict = coboundary_test(tc, family, COBOUNDARY_TOL)
    details = {'verdict': verdict.kind, 'value': verdict.value}
    if not any(b.eps for b in tc.spec.bumps):
        metrics = [check_le('cycle_pcf_max', max(abs(v) for v in values), COBOUNDARY_TOL)]
        residuals = []
        for _ in range(min(ctx.config.samples, 100)):
            p, t = model.sample(ctx.rng), ctx.rng.uniform(-5.0, 5.0)
            residuals.append(model.dist(tc.conjugacy(tc.flow_tau(p, t, tol)), tc.flow_kappa(tc.conjugacy(p), t)))
        metrics.append(check_le('conjugacy_residual_max', max(residuals), CONJUGACY_BOUND))
    else:
        metrics = [check_ge('witness_abs_pcf', max(abs(v) for v in values), WITNESS_BOUND)]
    logging.info(f"Coboundary verdict: {verdict.kind}")
    return ExperimentResult(metrics, data, details)


BASE_FIELDS = ('model', 'tau', 'seed', 'tol', 'samples', 'out')

experiments = {
    'access': Experiment('accessibility certificate (engulfing sweep and orbit connection)', BASE_FIELDS,
                         run_access),
    'averages': Experiment('Haar averaging identities for cycle functionals and orbit integrals', BASE_FIELDS,
                           run_averages),
    'coboundary': Experiment('coboundary detection through vanishing cycle functionals', BASE_FIELDS,
                             run_coboundary),
    'foliation': Experiment('graph construction of the new stable leaves and the lifted splitting',
                            BASE_FIELDS + ('t_max',), run_foliation),
    'identities': Experiment('reparametrization cocycle identities and positivity', BASE_FIELDS,
                             run_identities),
    'mixing': Experiment('pair-correlation decay of the time-changed flow', BASE_FIELDS + ('t_max',),
                         run_mixing),
    'pcf': Experiment('periodic cycle functionals and su-path transport', BASE_FIELDS, run_pcf),
    'rates': Experiment('pointwise partial hyperbolicity and center bunching at T = 10', BASE_FIELDS,
                        run_rates),
}


def list_experiments():
    """
    One line per experiment, alphabetical: name, description and required config fields
    """
    return '\n'.join(f"{name}\t{experiments[name].description}\t[{', '.join(experiments[name].fields)}]"
                     for name in sorted(experiments))
