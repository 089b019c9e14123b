"""Suite handlers: one per command, each returning report records"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from abnorm.config.settings import CommandConfig
from abnorm.core import burkholder as bk
from abnorm.core import discrete_spectral as ds
from abnorm.core import planar_field as pf
from abnorm.core import radial_reduction as rr
from abnorm.core.burkholder import Exponent
from abnorm.core.errors import ZeroDenominatorError
from abnorm.models.report import CheckRecord
from abnorm.utils.helpers import check_seed
from abnorm.utils.serialization import write_norm_artifacts

logger = logging.getLogger(__name__)

SCALING_EXPONENTS = (1.3, 1.5, 1.7, 2.5, 3.0)
CONVEXITY_EXPONENTS = (1.5, 3.0)
POINTWISE_CHUNK = 5000
MEXICAN_HAT_SIGMA = 1.0

PSI_CONVEXITY_ANCHOR = '§2, "implies that it is convex"'
LINE_CONVEXITY_ANCHOR = '§3, "$t\\rightarrow L_p(z+tZ, w+tW)$ is convex"'
SCALING_ANCHOR = '§3, "$t^{p-1} L(\\frac{z}t, \\frac{w}t) dt$"'
CROSSCHECK_ANCHOR = '§4, "$Tg(\\rho e^{i\\varphi}) = e^{-2i\\varphi}\\int_0^{\\infty} n(\\rho,r) g(r)\\,rdr$"'

CheckBody = Callable[[], Tuple[dict, bool]]


def guarded(name: str, anchor: str, tolerance: Optional[float], body: CheckBody) -> CheckRecord:
    """Run one check; any exception becomes a failed record"""
    logger.info(f"▶️ {name} ({anchor})")
    try:
        values, passed = body()
    except Exception as e:
        logger.error(f"❌ {name} raised {type(e).__name__}: {e}")
        return CheckRecord(name, anchor, {}, tolerance, False, error=f"{type(e).__name__}: {e}")
    if passed:
        logger.info(f"✅ {name}")
    else:
        logger.warning(f"⚠️ {name} failed: {values}")
    return CheckRecord(name, anchor, values, tolerance, bool(passed))


def half_line_grid(config: CommandConfig, measure: str = 'lebesgue') -> rr.RadialGrid:
    return rr.RadialGrid.log_spaced(config.grid_min, config.grid_max, config.grid_n, measure)


# ---------------------------------------------------------------- pointwise

def run_pointwise(config: CommandConfig) -> List[CheckRecord]:
    records = []

    def roundtrip():
        rng = np.random.default_rng(check_seed(config.seed, 'dictionary_roundtrip'))
        points = bk.sample_phase_points(rng, 10_000, 1e-3, 1.0)
        back = bk.matrix_to_phase(bk.phase_to_matrix(points))
        roundtrip_error = float(max(np.max(np.abs(back.z - points.z)), np.max(np.abs(back.w - points.w))))
        matrices = bk.sample_matrices(rng, 10_000)
        phase = bk.matrix_to_phase(matrices)
        identity_error = float(np.max(np.abs(np.abs(phase.z) ** 2 - (matrices.frobenius_squared - 2 * matrices.det))))
        tol = config.tolerance('dictionary_roundtrip')
        return ({'roundtripError': roundtrip_error, 'modulusIdentityError': identity_error},
                roundtrip_error < tol and identity_error < 100 * tol)
    records.append(guarded('dictionary_roundtrip', '§2, "Put $z= a-d +i(b+c)$"',
                           config.tolerance('dictionary_roundtrip'), roundtrip))

    def majorization():
        rng = np.random.default_rng(check_seed(config.seed, 'burkholder_majorization'))
        total = config.workload('pointwise_samples')
        exponents = bk.sample_exponents(rng, max(total // POINTWISE_CHUNK, 1))
        worst = np.inf
        for p in exponents:
            e = Exponent(float(p))
            points = bk.sample_phase_points(rng, POINTWISE_CHUNK)
            relative = bk.burkholder_margin(points, e) / bk.burkholder_scale(points, e)
            worst = min(worst, float(np.min(relative)))
        return ({'minRelativeMargin': worst, 'samples': len(exponents) * POINTWISE_CHUNK},
                worst >= -config.tolerance('burkholder_majorization'))
    records.append(guarded('burkholder_majorization', 'Eq. (Bur1)',
                           config.tolerance('burkholder_majorization'), majorization))

    def equality():
        z = np.linspace(0.1, 10.0, 100).astype(complex)
        point = bk.PhasePoint(z, np.zeros_like(z))
        e = Exponent(2.0)
        relative = np.abs(bk.burkholder_margin(point, e)) / bk.burkholder_scale(point, e)
        deviation = float(np.max(relative))
        return {'maxRelativeGap': deviation}, deviation <= config.tolerance('burkholder_equality')
    records.append(guarded('burkholder_equality', 'Eq. (Bur1)', config.tolerance('burkholder_equality'), equality))

    tags = [('psi', bk.PSI, PSI_CONVEXITY_ANCHOR), ('m_along_line', bk.M_ALONG_LINE, LINE_CONVEXITY_ANCHOR)]
    tags += [(f'psi_p={p:g}', bk.psi_p(Exponent(p)), LINE_CONVEXITY_ANCHOR) for p in CONVEXITY_EXPONENTS]
    for label, tag, anchor in tags:
        records.append(guarded(f'rank_one_convexity[{label}]', anchor, config.tolerance('rank_one_convexity'),
                               _convexity_body(config, label, tag)))

    for p in SCALING_EXPONENTS:
        records.append(guarded(f'scaling_integral[p={p:g}]', SCALING_ANCHOR, config.tolerance('scaling_integral'),
                               _scaling_body(config, Exponent(p))))
    return records


def _convexity_body(config: CommandConfig, label: str, tag: bk.FunctionTag) -> CheckBody:
    def body():
        rng = np.random.default_rng(check_seed(config.seed, f'rank_one_convexity[{label}]'))
        count = config.workload('convexity_probes')
        base = bk.RealMatrix2(*(2.0 * rng.uniform(-1.0, 1.0, (4, count))))
        direction = bk.sample_rank_one_batch(rng, count)
        t = np.sort(rng.uniform(-2.0, 2.0, (2, count)), axis=0)
        t[1] = np.maximum(t[1], t[0] + 1e-6)
        margin, scale = bk.midpoint_probe(tag, base, direction, t[0], t[1])
        tol = config.tolerance('rank_one_convexity')
        violations = int(np.sum(margin < -tol * scale))
        relative = margin / np.where(scale > 0, scale, 1.0)
        return {'probes': count, 'violations': violations,
                'minRelativeMargin': float(np.min(relative))}, violations == 0
    return body


def _scaling_body(config: CommandConfig, e: Exponent) -> CheckBody:
    def body():
        constant = bk.scaling_integral_constant(e)
        fitted = bk.scaling_integral_ratio(bk.PhasePoint(1.0, 0.0), e)
        rng = np.random.default_rng(check_seed(config.seed, f'scaling_integral[{e}]'))
        ratios = []
        for _ in range(config.workload('scaling_points')):
            point = bk.sample_phase_points(rng, 1, 0.1, 10.0)
            try:
                ratios.append(bk.scaling_integral_ratio(bk.PhasePoint(complex(point.z[0]), complex(point.w[0])), e))
            except ZeroDenominatorError:
                continue
        ratios = np.asarray(ratios)
        spread = float(np.max(np.abs(ratios / constant - 1.0))) if ratios.size else 0.0
        fit_error = abs(fitted / constant - 1.0)
        tol = config.tolerance('scaling_integral')
        return ({'constant': constant, 'fitted': fitted, 'fitError': fit_error,
                 'ratioSpread': spread, 'points': int(ratios.size)},
                fit_error <= tol and spread <= tol)
    return body


# ---------------------------------------------------------------- norms

def run_norms(config: CommandConfig) -> List[CheckRecord]:
    grid = half_line_grid(config)
    operators = {kind: ds.discretize(kind, grid, scheme='cell') for kind in ('hardy', 'hardy_minus_id')}
    records = []

    def lambda_identity():
        lam = ds.discretize('lambda', grid, m=0, scheme='cell')
        expected = np.eye(len(grid)) - operators['hardy'].matrix
        deviation = float(max(np.max(np.abs(lam.matrix - expected)),
                              np.max(np.abs(lam.tail - operators['hardy'].tail))))
        return {'maxDeviation': deviation}, deviation <= config.tolerance('lambda0_identity')
    records.append(guarded('lambda0_identity', '§4.1, "$\\Lambda_0= \\Id - H$"',
                           config.tolerance('lambda0_identity'), lambda_identity))

    options = ds.NormOptions(max_iter=config.workload('norm_max_iter'),
                             restarts=config.workload('norm_restarts'), seed=config.seed)
    lower, upper = config.tolerance('norm_lower'), config.tolerance('norm_upper')
    for e in config.exponents:
        for kind in ('hardy_minus_id', 'hardy'):
            records.append(_norm_record(operators[kind], e, options, lower, upper, config.artifact_dir))
        records.append(_refinement_record(config, e, upper))
    return records


def refinement_grid(config: CommandConfig) -> rr.RadialGrid:
    """Coarse grid that reaches about grid_n nodes after two refinements"""
    n = max((config.grid_n + 3) // 4, 2)
    return rr.RadialGrid.log_spaced(config.grid_min, config.grid_max, n)


def _refinement_record(config: CommandConfig, e: Exponent, upper: float) -> CheckRecord:
    target = e.p_star - 1.0

    def body():
        options = ds.NormOptions(max_iter=config.workload('norm_max_iter'), restarts=1, seed=config.seed)
        estimates = ds.refine_norm('hardy_minus_id', refinement_grid(config), e, 2, options)
        values = [estimate.value for estimate in estimates]
        nondecreasing = all(b >= a * (1.0 - ds.ASCENT_SLACK) for a, b in zip(values, values[1:]))
        return ({'values': values, 'sizes': [len(estimate.witness.grid) for estimate in estimates],
                 'target': target, 'nondecreasing': nondecreasing},
                nondecreasing and values[-1] <= target * upper)
    return guarded(f'norm_refinement[p={e.p:g}]', 'Eq. (normH_I)', upper, body)


def _norm_record(K: ds.TriangularOperator, e: Exponent, options: ds.NormOptions,
                 lower: float, upper: float, artifact_dir: str = '') -> CheckRecord:
    sharp = e.p <= 2.0
    if K.kind == 'hardy_minus_id':
        target = e.p_star - 1.0
        anchor = 'Eq. (normH_Ireal)' if sharp else 'Eq. (normH_I)'
    else:
        target = e.p_star
        anchor = 'Eq. (normH)'

    def body():
        estimate = ds.estimate_norm(K, e, options)
        witness_value = ds.rayleigh_quotient(K, estimate.witness, e)
        ascending = all(b >= a * (1.0 - ds.ASCENT_SLACK) for a, b in zip(estimate.history, estimate.history[1:]))
        passed = estimate.value <= target * upper and ascending
        if sharp:
            passed = passed and estimate.value >= target * lower
        values = estimate.to_dict()
        values.update({'target': target, 'ascending': ascending,
                       'witnessRecomputed': witness_value, 'lowerGate': sharp})
        if artifact_dir:
            values['artifact'] = write_norm_artifacts(estimate, artifact_dir)
        return values, passed
    return guarded(f'norm_{K.kind}[p={e.p:g}]', anchor, lower if sharp else upper, body)


# ---------------------------------------------------------------- stretch

def random_stretch_family() -> ds.LogBumpFamily:
    grid = rr.RadialGrid.log_spaced(np.exp(-20.0), np.exp(20.0), 3000, 'radial')
    return ds.LogBumpFamily.spanning(grid, -30.0, 30.0, 32)


def analytic_compact_stretch(grid: Optional[rr.RadialGrid] = None) -> rr.StretchProfile:
    """g = r^2 exp(-r^2), vanishing to high order at both ends"""
    grid = grid or rr.RadialGrid.log_spaced(1e-3, 10.0, 4000, 'radial')
    r = grid.nodes
    g = rr.RadialProfile(grid, r ** 2 * np.exp(-r ** 2), mode_index=1)
    g_prime = rr.RadialProfile(grid, (2.0 * r - 2.0 * r ** 3) * np.exp(-r ** 2), mode_index=1)
    return rr.StretchProfile(g, g_prime)


def indicator_baseline_ratio(e: Exponent) -> float:
    """Stretch ratio of beta = 1 on [0, 1]"""
    rho = rr.RadialGrid.log_spaced(1e-6, 1e12, 6000, 'lebesgue')
    beta = rr.RadialProfile(rho, np.where(rho.nodes <= 1.0, 1.0, 0.0))
    return ds.stretch_ratio(rr.stretch_from_beta(beta), e)


def run_stretch(config: CommandConfig) -> List[CheckRecord]:
    family = random_stretch_family()
    records = []
    for e in config.exponents:
        bound = e.p_star - 1.0

        def random_checks(e=e, bound=bound):
            rng = np.random.default_rng(check_seed(config.seed, f'stretch[{e}]'))
            count = config.workload('random_stretches')
            stretches = [ds.random_stretch(rng, family) for _ in range(count)]
            ratios = np.array([ds.stretch_ratio(s, e) for s in stretches])
            functionals = np.array([ds.mode_functional(s, e) / ds.mode_functional_scale(s, e) for s in stretches])
            violations = int(np.sum(ratios > bound + config.tolerance('stretch_inequality')))
            negative = int(np.sum(functionals < -config.tolerance('mode_functional')))
            return ({'stretches': count, 'maxRatio': float(np.max(ratios)), 'bound': bound,
                     'violations': violations, 'minRelativeFunctional': float(np.min(functionals)),
                     'negativeFunctionals': negative},
                    violations == 0 and negative == 0)
        records.append(guarded(f'stretch_inequality[p={e.p:g}]', 'Eq. (g)',
                               config.tolerance('stretch_inequality'), random_checks))

        def sharpness(e=e, bound=bound):
            ratio, _ = ds.maximize_stretch_ratio(e)
            gated = e.p <= 2.0
            passed = ratio <= bound + config.tolerance('stretch_inequality')
            if gated:
                passed = passed and ratio >= config.tolerance('stretch_sharpness') * bound
            return {'ratio': ratio, 'bound': bound, 'lowerGate': gated}, passed
        records.append(guarded(f'stretch_sharpness[p={e.p:g}]', '§3, "both results are sharp for $1<p\\le 2$"',
                               config.tolerance('stretch_sharpness'), sharpness))

        if e.p < 2.0:
            def baseline(e=e, bound=bound):
                ratio = indicator_baseline_ratio(e)
                return {'ratio': ratio, 'closedForm': (e.p - 1.0) ** (-1.0 / e.p), 'bound': bound}, ratio < bound
            records.append(guarded(f'stretch_baseline[p={e.p:g}]', 'Eq. (invbeta)', None, baseline))

    def p2_zero():
        s = analytic_compact_stretch()
        e = Exponent(2.0)
        relative = ds.mode_functional(s, e) / ds.mode_functional_scale(s, e)
        return {'relativeFunctional': relative}, abs(relative) <= config.tolerance('mode_functional')
    records.append(guarded('mode_functional_p2_zero', 'Eq. (BWpr)', config.tolerance('mode_functional'), p2_zero))
    return records


# ---------------------------------------------------------------- crosscheck2d

def mexican_hat(grid: rr.RadialGrid, sigma: float = MEXICAN_HAT_SIGMA) -> rr.RadialProfile:
    """(r^2/sigma^4 - 2/sigma^2) exp(-r^2 / 2 sigma^2), the Laplacian of a Gaussian"""
    r = grid.nodes
    return rr.RadialProfile(grid, (r ** 2 / sigma ** 4 - 2.0 / sigma ** 2) * np.exp(-r ** 2 / (2.0 * sigma ** 2)))


def crosscheck_grid(extent: float) -> rr.RadialGrid:
    return rr.RadialGrid.log_spaced(1e-3, 0.45 * extent, 2000, 'radial')


def run_crosscheck(config: CommandConfig) -> List[CheckRecord]:
    g = mexican_hat(crosscheck_grid(config.extent))
    e = config.exponents[0]
    sizes = (config.field_n, 2 * config.field_n)

    def attempt(n):
        try:
            return pf.crosscheck_radial(g, e, n, config.extent)
        except Exception as error:
            return error

    with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
        results = list(pool.map(attempt, sizes))
    records = []

    def coarse():
        if isinstance(results[0], Exception):
            raise results[0]
        return results[0]

    def mode():
        result = coarse()
        values = result.to_dict()
        return values, result.phase_mode == 2 and result.energy_fraction >= config.tolerance('crosscheck_concentration')
    records.append(guarded(f'crosscheck_mode[n={sizes[0]}]', CROSSCHECK_ANCHOR,
                           config.tolerance('crosscheck_concentration'), mode))

    def mismatch():
        result = coarse()
        return {'mismatch': result.mismatch}, result.mismatch <= config.tolerance('crosscheck_mismatch')
    records.append(guarded(f'crosscheck_mismatch[n={sizes[0]}]', 'Eq. (HI)',
                           config.tolerance('crosscheck_mismatch'), mismatch))

    def convergence():
        if isinstance(results[1], Exception):
            raise results[1]
        first, second = coarse().mismatch, results[1].mismatch
        ratio = second / first if first > 0 else 0.0
        return ({'mismatch': [first, second], 'sizes': list(sizes), 'ratio': ratio},
                ratio <= config.tolerance('crosscheck_convergence'))
    records.append(guarded('crosscheck_convergence', 'Eq. (HI)', config.tolerance('crosscheck_convergence'), convergence))

    def contraction():
        output = coarse().output
        grid = crosscheck_grid(config.extent)
        values, passed = {}, True
        for exponent in config.exponents:
            mode_norm, field_norm = rr.mode_contraction(output, 2, grid, exponent)
            values[str(exponent)] = [mode_norm, field_norm]
            passed = passed and mode_norm <= field_norm * (1.0 + 1e-12)
        return values, passed
    records.append(guarded('mode_contraction', '§4, "symmetrization"', None, contraction))

    def sverak():
        field_in = pf.PlaneField.from_radial(g, config.field_n, config.extent)
        dbar, d = pf.spectral_derivatives(field_in)
        cell = field_in.spacing ** 2
        values = {'informational': True, 'L': bk.sverak_functional(dbar.samples, d.samples, cell)}
        for exponent in config.exponents:
            values[f'L_p[{exponent}]'] = bk.sverak_functional(dbar.samples, d.samples, cell, exponent)
        return values, True
    records.append(guarded('sverak_functional', '§2, "Define a function $L$"', None, sverak))
    return records


# ---------------------------------------------------------------- heat

def gaussian_field(n: int, extent: float, center: complex, width: float) -> pf.PlaneField:
    return pf.PlaneField.from_function(lambda z: np.exp(-np.abs(z - center) ** 2 / (2.0 * width ** 2)), n, extent)


def run_heat(config: CommandConfig) -> List[CheckRecord]:
    n, extent = config.field_n, config.extent
    f = gaussian_field(n, extent, -1.5 + 0.0j, 0.75)
    g = gaussian_field(n, extent, 1.5 + 0.5j, 0.75)
    records = []

    def semigroup():
        twice = pf.heat_extend(pf.heat_extend(f, 0.3), 0.7)
        once = pf.heat_extend(f, 1.0)
        law = float(np.max(np.abs(twice.samples - once.samples)) / np.max(np.abs(f.samples)))
        mean_drift = abs(once.mean - f.mean) / abs(f.mean)
        small = float(np.max(np.abs(pf.heat_extend(f, 1e-8).samples - f.samples)))
        s, t = 0.75, 1.0
        width = s ** 2 + 2.0 * t
        probe = [(n // 2, n // 2), (n // 2 + 4, n // 2 - 8), (n // 2 - 6, n // 2 + 3)]
        axis = -extent / 2.0 + extent * np.arange(n) / n
        worst = 0.0
        for row, column in probe:
            z = axis[column] + 1j * axis[row]
            exact = s ** 2 / width * np.exp(-abs(z + 1.5) ** 2 / (2.0 * width))
            worst = max(worst, abs(once.samples[row, column] - exact) / max(abs(exact), 1e-300))
        tol = config.tolerance('heat_semigroup')
        return ({'semigroupDeviation': law, 'meanDrift': mean_drift, 'smallTimeDeviation': small,
                 'gaussianRelativeError': worst},
                law <= tol and mean_drift <= tol and small < 1e-6 and worst < 1e-6)
    records.append(guarded('heat_semigroup', '§4.3, "By the same letters we denote their heat extensions"',
                           config.tolerance('heat_semigroup'), semigroup))

    def identity():
        fine = pf.hext_residual(f, g)
        coarse = pf.hext_residual(f, g, nt=12)
        values = fine.to_dict()
        values['coarseResidual'] = coarse.residual
        return values, fine.residual < config.tolerance('heat_identity') and fine.residual <= coarse.residual
    records.append(guarded('heat_identity', 'Lemma (hext)', config.tolerance('heat_identity'), identity))
    return records


# ---------------------------------------------------------------- structural

def default_mode_pair(grid: Optional[rr.RadialGrid] = None) -> pf.ModePair:
    grid = grid or rr.RadialGrid.from_nodes(np.linspace(1e-4, 8.0, 8001), 'radial')
    return pf.ModePair.from_functions(
        grid,
        m=lambda r: r ** 2 * np.exp(-r ** 2),
        k=lambda r: r ** 3 * np.exp(-r ** 2),
        xi=lambda r: np.exp(-r ** 2),
        eta=lambda r: 0.5 * np.exp(-r ** 2 / 2.0),
        derivatives=(
            lambda r: (2.0 * r - 2.0 * r ** 3) * np.exp(-r ** 2),
            lambda r: (3.0 * r ** 2 - 2.0 * r ** 4) * np.exp(-r ** 2),
            lambda r: -2.0 * r * np.exp(-r ** 2),
            lambda r: -0.5 * r * np.exp(-r ** 2 / 2.0),
        ),
    )


def run_structural(config: CommandConfig) -> List[CheckRecord]:
    mp = default_mode_pair()
    records = []
    for phi in (pf.SurrogatePhi.default(), pf.SurrogatePhi.trigonometric()):
        holder = {}

        def report(phi=phi, holder=holder):
            if 'report' not in holder:
                holder['report'] = pf.structural_identities(mp, phi)
            return holder['report']

        pointwise = config.tolerance('structural_pointwise')

        def d1(report=report):
            value = report().d1_circle
            return {'maxCircleIntegral': value}, value <= pointwise
        records.append(guarded(f'structural_d1[{phi.name}]', 'Eq. (D1)', pointwise, d1))

        def c_term(report=report):
            value = report().c_integrand
            return {'maxIntegrand': value}, value <= config.tolerance('structural_c')
        records.append(guarded(f'structural_c[{phi.name}]', '§4.4, "So $C=0$"',
                               config.tolerance('structural_c'), c_term))

        def jacobians(report=report):
            result = report()
            return ({'angular': result.angular_jacobian, 'radial': result.radial_jacobian},
                    max(result.angular_jacobian, result.radial_jacobian) <= pointwise)
        records.append(guarded(f'structural_jacobians[{phi.name}]', '§4.4, "$2 (m^2(r) + k^2(r))$"',
                               pointwise, jacobians))

        def closed_forms(report=report):
            result = report()
            return ({'d2': result.d2_closed_form, 'a': result.a_closed_form},
                    max(result.d2_closed_form, result.a_closed_form) <= pointwise)
        records.append(guarded(f'structural_d2_a[{phi.name}]', 'Eq. (D2)', pointwise, closed_forms))

        def ibp(report=report):
            result = report()
            worst = max(result.ibp_origin, result.ibp_sum, result.ibp_off_origin)
            return ({'origin': result.ibp_origin, 'sum': result.ibp_sum, 'offOrigin': result.ibp_off_origin,
                     'a': result.a_integral, 'b': result.b_integral},
                    worst <= config.tolerance('structural_ibp'))
        records.append(guarded(f'structural_ibp[{phi.name}]', '§4.4, "Integrating $b$ by parts"',
                               config.tolerance('structural_ibp'), ibp))
    return records


HANDLERS: Dict[str, Callable[[CommandConfig], List[CheckRecord]]] = {
    'pointwise': run_pointwise,
    'norms': run_norms,
    'stretch': run_stretch,
    'crosscheck2d': run_crosscheck,
    'heat': run_heat,
    'structural': run_structural,
}
