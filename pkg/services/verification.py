import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Any

import numpy as np
import pandas as pd

from services.config_parser import RunConfig
from services.dielectric_fields import (
    electric_spectral_density, k_integral, magnetic_spectral_density, noise_correlator,
    regularized_propagator_trace, spectral_density, thermal_electric_spectral_density, xp_commutator,
)
from services.energy_density import (
    brace_identity, secular_cancellation_shared_nodes, total_energy_density, w2_stationary_integrand_k_route,
)
from services.medium_models import (
    bose_occupation, branch_continuity, d_omega_index, eval_permittivity, permittivity_table, refractive_index,
)
from services.oscillator_reservoir import (
    build_bath, commutator_norm, commutator_norm_closed_form, compare_langevin_fano, damping_kernel_check,
    evolve_heisenberg, frequency_shift, frequency_shift_quadrature, windowed_sinusoid,
)
from utils.errors import FieldQuantError
from utils.logger import get_logger

logger = get_logger(__name__)

# Frequencies (in units of w0) at which pointwise identities are sampled
IDENTITY_GRID = np.geomspace(0.1, 10.0, 20)
KERNEL_CUTOFF = 50.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    identity: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ''

    def line(self) -> str:
        status = 'PASS' if self.passed else 'FAIL'
        text = f"{status}  {self.name}: {self.identity} (residual {self.residual:.3e}, tolerance {self.tolerance:.1e})"
        return f"{text} [{self.detail}]" if self.detail else text

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'identity': self.identity, 'passed': self.passed,
                'residual': self.residual, 'tolerance': self.tolerance, 'detail': self.detail}


@dataclass
class SuiteResult:
    command: str
    checks: List[CheckResult] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, other: "SuiteResult"):
        self.checks.extend(other.checks)
        self.tables.update(other.tables)
        self.notes.extend(other.notes)


def _check(name: str, identity: str, residual: float, tolerance: float, detail: str = '') -> CheckResult:
    passed = bool(np.isfinite(residual) and residual <= tolerance)
    result = CheckResult(name=name, identity=identity, passed=passed, residual=float(residual),
                         tolerance=tolerance, detail=detail)
    log = logger.info if passed else logger.warning
    log(result.line())
    return result


def _guarded(suite: SuiteResult, name: str, identity: str, compute: Callable[[], CheckResult]):
    """Run one check; a library error becomes a FAIL line naming the identity"""
    try:
        suite.checks.append(compute())
    except FieldQuantError as e:
        logger.error(f"Error evaluating {name}: {str(e)}")
        suite.checks.append(CheckResult(name=name, identity=identity, passed=False, residual=float('nan'),
                                        tolerance=float('nan'), detail=f"{type(e).__name__}: {str(e)}"))


def permittivity_suite(cfg: RunConfig) -> SuiteResult:
    m = cfg.medium
    suite = SuiteResult(command='permittivity')
    grid = cfg.grid.omega_grid()
    suite.tables['permittivity'] = permittivity_table(m, grid)

    def passivity():
        eps_i = np.imag(eval_permittivity(m, grid))
        residual = 0.0 if m.is_vacuum else max(0.0, -float(eps_i.min()))
        ok_grid = m.is_vacuum or bool(np.all(eps_i > 0))
        return _check('passivity', 'Im eps(w) > 0 on the output grid',
                      residual if ok_grid else max(residual, 1.0), 0.0)

    def continuity():
        scan = branch_continuity(m, cfg.grid.omega_min, cfg.grid.omega_max)
        return _check('branch continuity', '|n(w_j+1) - n(w_j)| bounded with n_i >= 0',
                      scan['max_step_ratio'], 1.0, detail=f"{scan['points']} points")

    def index_square():
        n = refractive_index(m, grid)
        eps = eval_permittivity(m, grid)
        residual = float(np.max(np.abs(n.permittivity - eps) / np.abs(eps)))
        return _check('index branch', 'n(w)^2 = eps(w)', residual, 1e-12)

    _guarded(suite, 'passivity', 'Im eps(w) > 0 on the output grid', passivity)
    _guarded(suite, 'branch continuity', '|n(w_j+1) - n(w_j)| bounded with n_i >= 0', continuity)
    _guarded(suite, 'index branch', 'n(w)^2 = eps(w)', index_square)
    return suite


def oscillator_suite(cfg: RunConfig) -> SuiteResult:
    m = cfg.oscillator
    q = cfg.quadrature
    suite = SuiteResult(command='oscillator')

    if m.include_shift:
        commutator_identity = '[a, a^dagger] = int |A(W)|^2 dW = 1 with the cut-off shift kept'
        shift_identity = 'PV (gamma/pi) int dw/(W - w) = (gamma/pi) ln((w_c - w0)/w0)'
        occupation_identity = '<a^dagger a> = int |A(W)|^2 n(W) dW with the cut-off shift kept'
    else:
        commutator_identity = '[a, a^dagger] = (atan((w_c - w0)/gamma) + atan(w0/gamma))/pi without the shift'
        shift_identity = 'Delta(w) = 0 once the shift is absorbed into w0'
        occupation_identity = '<a^dagger a> = n(w0), the Bose factor at w0'
    decay_identity = '|u_0(t)|^2 = exp(-2 gamma t) in the steady-state window'
    unitarity_identity = 'sum_j |u_j(t)|^2 = 1'
    damping_identity = 'reservoir memory integral = -gamma dx/dt'

    def rwa_commutator():
        value = commutator_norm(m, q)
        expected = 1.0 if m.include_shift else commutator_norm_closed_form(m)
        return _check('rwa commutator', commutator_identity, abs(value - expected), 1e-6,
                      detail=f"value {value:.9f}")

    def shift_pv():
        if not m.include_shift:
            residual = abs(frequency_shift(m, m.omega0)) + abs(frequency_shift_quadrature(m, m.omega0, q))
            return _check('frequency shift', shift_identity, residual, 0.0)
        value = frequency_shift_quadrature(m, m.omega0, q)
        closed = frequency_shift(m, m.omega0)
        return _check('frequency shift', shift_identity, abs(value - closed) / abs(closed), 1e-8)

    bath_holder = {}

    def comparison():
        bath = build_bath(m, cfg.grid.n_modes, cfg.grid.omega_max_bath)
        bath_holder['bath'] = bath
        temperature = m.temperature if m.temperature > 0 else m.omega0
        result = compare_langevin_fano(m, cfg.grid.n_modes, cfg.grid.omega_max_bath, temperature=temperature,
                                       q=q, bath=bath)
        bath_holder['comparison'] = result
        suite.tables['oscillator_compare'] = result.to_frame()
        suite.notes.extend(result.warnings)
        return _check('langevin-fano decay', decay_identity, result.max_decay_deviation, 0.05,
                      detail=f"{bath.n_modes} modes")

    def occupation():
        result = bath_holder['comparison']
        if m.include_shift:
            residual = result.continuum_occupation_deviation
            reference = result.occupation_continuum
        else:
            residual = result.occupation_deviation
            reference = result.occupation_bose
        return _check('thermal occupation', occupation_identity, residual, 1e-2,
                      detail=f"T={result.temperature:g}, n={result.occupation_eigen:.6f}, "
                             f"expected {reference:.6f}")

    def unitarity():
        bath = bath_holder['bath']
        evolution = evolve_heisenberg(bath, 1.0 / m.gamma)
        residual = max(bath.orthogonality_error(), abs(evolution.norm - 1.0))
        return _check('unitarity', unitarity_identity, residual, 1e-10)

    def damping():
        trial = windowed_sinusoid(frequency=m.omega0)
        center = (math.pi / 4 + 6 * math.pi) / m.omega0
        check = damping_kernel_check(m, trial, center, KERNEL_CUTOFF * m.omega0, q)
        return _check('damping kernel', damping_identity, check.relative_deviation, 2e-2,
                      detail=f"w_max={check.omega_max:g}")

    _guarded(suite, 'rwa commutator', commutator_identity, rwa_commutator)
    _guarded(suite, 'frequency shift', shift_identity, shift_pv)
    _guarded(suite, 'langevin-fano decay', decay_identity, comparison)
    if 'comparison' in bath_holder:
        _guarded(suite, 'thermal occupation', occupation_identity, occupation)
        _guarded(suite, 'unitarity', unitarity_identity, unitarity)
    _guarded(suite, 'damping kernel', damping_identity, damping)
    return suite


def dielectric_suite(cfg: RunConfig) -> SuiteResult:
    m = cfg.medium
    q = cfg.quadrature
    suite = SuiteResult(command='dielectric')
    grid = cfg.grid.omega_grid()
    omegas = IDENTITY_GRID * m.omega0
    temperature = m.temperature

    electric = spectral_density(m, grid, 'electric', q)
    magnetic = spectral_density(m, grid, 'magnetic', q)
    spectra_e = electric.to_frame()
    spectra_e['normal'] = thermal_electric_spectral_density(m, grid, 'normal', temperature)
    spectra_e['antinormal'] = thermal_electric_spectral_density(m, grid, 'antinormal', temperature)
    suite.tables['spectra_E'] = spectra_e
    suite.tables['spectra_H'] = magnetic.to_frame()

    def fluctuation_dissipation():
        worst = 0.0
        for w in np.linspace(0.1, 5.0, 10) * m.omega0:
            for t in np.linspace(0.0, 2.0, 5) * m.omega0:
                normal = noise_correlator(m, w, 'normal', t)
                anti = noise_correlator(m, w, 'antinormal', t)
                eps_i = float(np.imag(eval_permittivity(m, w)))
                n_bar = float(bose_occupation(w, t))
                scale = 4 * eps_i * (n_bar + 1)
                worst = max(worst,
                            abs(anti.amplitude - normal.amplitude - 4 * eps_i) / scale,
                            abs(normal.amplitude - 4 * eps_i * n_bar) / scale)
        return _check('fluctuation-dissipation', '<j j^dagger> - <j^dagger j> = 4 eps_I',
                      worst, 1e-12, detail='50-point (w, T) grid')

    def k_identity():
        worst = max(k_integral(m, w, q).relative_deviation for w in omegas)
        return _check('k-integral', 'int k^2 dk / |k^2 - eps w^2|^2 = pi^2 / (w n_i)', worst, 1e-8)

    def electric_density():
        worst = max(electric_spectral_density(m, w, q).relative_deviation for w in omegas)
        return _check('electric spectrum', 'S_E(w) = w^3 n_r / pi', worst, 1e-8)

    def magnetic_density():
        worst = 0.0
        for w in omegas:
            point = magnetic_spectral_density(m, w, q)
            n = complex(refractive_index(m, w).value)
            scale = w ** 3 * abs(n) ** 3 / math.pi
            worst = max(worst, abs(point.quadrature - point.closed_form) / scale)
        return _check('magnetic spectrum', 'S_H(w) = w^3 Re(n^3) / pi after dropping the contact term',
                      worst, 1e-8)

    def propagator():
        worst = 0.0
        for w in omegas:
            trace = regularized_propagator_trace(m, w, q)
            worst = max(worst,
                        abs(trace.g_quadrature - trace.g_closed) / abs(trace.g_closed),
                        abs(trace.dg_quadrature - trace.dg_closed) / abs(trace.dg_closed))
        return _check('propagator trace', 'G(w) = 2 pi^2 i n w and dG/dw = 2 pi^2 i d(n w)/dw',
                      worst, 1e-8)

    def canonical_commutator():
        result = xp_commutator(m, 0.0, q=q)
        return _check('canonical commutator', '[x, p] = i hbar with the reservoir coupled',
                      abs(result.quadrature_value - 1.0), 1e-6)

    def commutator_in_time():
        taus = np.linspace(0.0, 10.0 / m.gamma, cfg.grid.tau_points)
        worst = max(xp_commutator(m, tau, q=q).deviation for tau in taus)
        return _check('commutator in time', '[x(t), x(t + tau)] = damped closed form in tau',
                      worst, 1e-6, detail=f"{len(taus)} delays")

    for name, identity, compute in (
            ('fluctuation-dissipation', '<j j^dagger> - <j^dagger j> = 4 eps_I', fluctuation_dissipation),
            ('k-integral', 'int k^2 dk / |k^2 - eps w^2|^2 = pi^2 / (w n_i)', k_identity),
            ('electric spectrum', 'S_E(w) = w^3 n_r / pi', electric_density),
            ('magnetic spectrum', 'S_H(w) = w^3 Re(n^3) / pi after dropping the contact term', magnetic_density),
            ('propagator trace', 'G(w) = 2 pi^2 i n w and dG/dw = 2 pi^2 i d(n w)/dw', propagator),
            ('canonical commutator', '[x, p] = i hbar with the reservoir coupled',
             canonical_commutator),
            ('commutator in time', '[x(t), x(t + tau)] = damped closed form in tau',
             commutator_in_time)):
        if m.is_vacuum and name in ('k-integral', 'electric spectrum', 'magnetic spectrum', 'propagator trace'):
            suite.notes.append(f"{name} skipped: lossless medium")
            continue
        _guarded(suite, name, identity, compute)
    return suite


def energy_suite(cfg: RunConfig) -> SuiteResult:
    m = cfg.medium
    q = cfg.quadrature
    omega_max = cfg.grid.energy_omega_max
    suite = SuiteResult(command='energy')
    holder = {}
    secular_identity = 'int w^4 eps_I (n_r - Re sqrt(eps)) dw / (2 pi^2) = 0 with separate quadratures'
    shared_identity = 'w^4 eps_I n_r - w^4 eps_I Re sqrt(eps) = 0 node by node'
    zero_point_identity = 'W1 + W2 = sum over modes of hbar w/2 with k = n_r w'
    routes_identity = 'W1 + W2 = int w^3 n_r^2 d(w n_r)/dw dw / (2 pi^2)'
    mode_sum_identity = 'mode sum = int w^3 n_r^2 d(w n_r)/dw dw / (2 pi^2)'
    decomposition_identity = 'stationary W1 + W2 = int of the complex-eps energy brace'
    brace_identity_text = 'energy brace = 4 n_r^2 d(w n_r)/dw pointwise'
    k_route_identity = 'k-space diagonal limit = w^2 eps_I Im(2 w n + w^2 dn/dw) / (8 pi^2)'

    def report():
        result = total_energy_density(m, omega_max, q)
        holder['report'] = result
        suite.tables['energy_report'] = pd.DataFrame([result.to_row()])
        suite.notes.append(result.to_text())
        if result.anomalous_dispersion:
            suite.notes.append("d(w n_r)/dw < 0 inside the band: mode counting is formal there")
        return _check('secular cancellation', secular_identity, result.cancellation_residual, 1e-8)

    def shared_nodes():
        w1, w2 = secular_cancellation_shared_nodes(m, omega_max)
        residual = abs(w1 + w2) / abs(w1) if w1 else abs(w2)
        return _check('secular cancellation on shared nodes', shared_identity, residual, 1e-12)

    def zero_point():
        r = holder['report']
        return _check('zero-point equivalence', zero_point_identity, r.identity_residual, 1e-6)

    def routes():
        r = holder['report']
        return _check('total energy routes', routes_identity, r.route_residual, 1e-6)

    def mode_sum_form():
        r = holder['report']
        return _check('mode sum form', mode_sum_identity,
                      abs(r.w_mode_sum - r.w_final_form) / abs(r.w_final_form), 1e-10)

    def decomposition():
        r = holder['report']
        return _check('absorption decomposition', decomposition_identity, r.decomposition_residual, 1e-8)

    def brace():
        worst = max(brace_identity(m, w).residual for w in np.geomspace(0.01, omega_max, 200))
        return _check('integrand identity', brace_identity_text, worst, 1e-10)

    def k_route():
        worst = 0.0
        for w in IDENTITY_GRID * m.omega0:
            value, closed = w2_stationary_integrand_k_route(m, w, q)
            eps_i = float(np.imag(eval_permittivity(m, w)))
            n = complex(refractive_index(m, w).value)
            d_n = complex(d_omega_index(m, w))
            scale = w ** 2 * eps_i * (2 * w * abs(n) + w ** 2 * abs(d_n)) / (8 * math.pi ** 2)
            worst = max(worst, abs(value - closed) / scale)
        return _check('absorption integrand k-route', k_route_identity, worst, 1e-8)

    _guarded(suite, 'secular cancellation', secular_identity, report)
    _guarded(suite, 'secular cancellation on shared nodes', shared_identity, shared_nodes)
    if 'report' in holder:
        _guarded(suite, 'zero-point equivalence', zero_point_identity, zero_point)
        _guarded(suite, 'total energy routes', routes_identity, routes)
        _guarded(suite, 'mode sum form', mode_sum_identity, mode_sum_form)
        _guarded(suite, 'absorption decomposition', decomposition_identity, decomposition)
    _guarded(suite, 'integrand identity', brace_identity_text, brace)
    if not m.is_vacuum:
        _guarded(suite, 'absorption integrand k-route', k_route_identity, k_route)
    return suite


SUITES = {
    'permittivity': (permittivity_suite,),
    'oscillator': (oscillator_suite,),
    'dielectric': (dielectric_suite,),
    'energy': (energy_suite,),
    'verify-all': (permittivity_suite, dielectric_suite, oscillator_suite, energy_suite),
}


def run_suites(cfg: RunConfig) -> SuiteResult:
    """All check suites belonging to cfg.command"""
    combined = SuiteResult(command=cfg.command)
    for suite in SUITES[cfg.command]:
        logger.info(f"Running {suite.__name__} for {cfg.command}")
        combined.extend(suite(cfg))
    passed = sum(c.passed for c in combined.checks)
    logger.info(f"{cfg.command}: {passed}/{len(combined.checks)} checks passed")
    return combined
