import math
from dataclasses import dataclass, asdict
from typing import Dict, Any, List, Tuple

import numpy as np

from config import Config
from services.dielectric_fields import SpectralDensity, magnetic_closed_form, regularized_propagator_trace
from services.medium_models import (
    MediumParams, d_omega_index, d_omega_n_r, d_omega_omega_eps_r, d_omega_permittivity,
    eval_permittivity, longitudinal_frequency, refractive_index,
)
from services.quadrature import QuadSpec, DEFAULT_QUAD, NodeSet, gauss_legendre_nodes, integrate
from utils.errors import DomainError, TruncationError
from utils.logger import get_logger

logger = get_logger(__name__)

POLARIZATIONS = 2


def _breakpoints(m: MediumParams, omega_max: float) -> List[float]:
    w_l = longitudinal_frequency(m)
    points = [m.omega0 - 2 * m.gamma, m.omega0, m.omega0 + 2 * m.gamma, w_l - 2 * m.gamma, w_l, w_l + 2 * m.gamma]
    return [p for p in points if 0 < p < omega_max]


def _offset_breakpoints(m: MediumParams, omega_max: float) -> List[float]:
    """Second breakpoint set around both resonances, disjoint from _breakpoints"""
    w_l = longitudinal_frequency(m)
    points = [c + k * m.gamma for c in (m.omega0, w_l) for k in (-5.0, -1.0, 1.0, 5.0)]
    return [p for p in points if 0 < p < omega_max]


def _band(m: MediumParams, omega_max: float, q: QuadSpec, f) -> float:
    return integrate(f, 0.0, omega_max, q, points=_breakpoints(m, omega_max)).value


def truncation_fraction(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD) -> float:
    """Share of the f-sum (pi/2) wp^2 of w eps_I lying above omega_max"""
    if m.is_vacuum:
        return 0.0
    inside = _band(m, omega_max, q, lambda w: w * eval_permittivity(m, w).imag)
    return max(0.0, 1.0 - inside / (math.pi * m.omega_p ** 2 / 2))


def _check_band(m: MediumParams, omega_max: float, q: QuadSpec, limit: float) -> float:
    if not omega_max > 0:
        raise DomainError(f"omega_max must be > 0, got {omega_max}", field='omega_max')
    fraction = truncation_fraction(m, omega_max, q)
    if fraction > limit:
        raise TruncationError(
            f"Band [0, {omega_max}] leaves {fraction:.3g} of the absorption sum rule outside "
            f"(limit {limit:.3g}); raise omega_max", tail_fraction=fraction)
    return fraction


@dataclass(frozen=True)
class W1Density:
    stationary_electric: float
    stationary_magnetic: float
    secular_coeff: float
    omega_max: float

    @property
    def stationary(self) -> float:
        return self.stationary_electric + self.stationary_magnetic


@dataclass(frozen=True)
class W2Density:
    stationary: float
    secular_coeff: float
    omega_max: float


def _w1_electric_integrand(m: MediumParams, w):
    return w ** 3 * refractive_index(m, w).n_r * d_omega_omega_eps_r(m, w)


def _w1_secular_integrand(m: MediumParams, w):
    return w ** 4 * refractive_index(m, w).n_r * np.imag(eval_permittivity(m, w))


def _w2_secular_integrand(m: MediumParams, w):
    eps = eval_permittivity(m, w)
    return -w ** 4 * np.imag(eps) * np.real(np.sqrt(eps))


def _w2_stationary_integrand(m: MediumParams, w):
    n = refractive_index(m, w).value
    d_n = d_omega_index(m, w)
    return w ** 2 * np.imag(eval_permittivity(m, w)) * np.imag(2 * w * n + w ** 2 * d_n)


def w1_density(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD,
               tail_fraction_limit: float = Config.TAIL_FRACTION_LIMIT) -> W1Density:
    """Stationary and secular parts of the Poynting-work density"""
    _check_band(m, omega_max, q, tail_fraction_limit)
    electric = POLARIZATIONS / (8 * math.pi ** 2) * _band(m, omega_max, q, lambda w: _w1_electric_integrand(m, w))
    magnetic = POLARIZATIONS / (8 * math.pi) * _band(m, omega_max, q, lambda w: magnetic_closed_form(m, w))
    secular = POLARIZATIONS / (4 * math.pi ** 2) * _band(m, omega_max, q, lambda w: _w1_secular_integrand(m, w))
    logger.debug(f"W1 on [0, {omega_max}]: electric {electric!r}, magnetic {magnetic!r}, secular {secular!r}")
    return W1Density(stationary_electric=electric, stationary_magnetic=magnetic, secular_coeff=secular,
                     omega_max=omega_max)


def w2_density(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD,
               tail_fraction_limit: float = Config.TAIL_FRACTION_LIMIT) -> W2Density:
    """Langevin-work density: stationary absorption term and secular coefficient"""
    _check_band(m, omega_max, q, tail_fraction_limit)
    stationary = POLARIZATIONS / (8 * math.pi ** 2) * _band(m, omega_max, q,
                                                             lambda w: _w2_stationary_integrand(m, w))
    secular_band = integrate(lambda w: _w2_secular_integrand(m, w), 0.0, omega_max, q,
                             points=_offset_breakpoints(m, omega_max))
    secular = POLARIZATIONS / (4 * math.pi ** 2) * secular_band.value
    logger.debug(f"W2 on [0, {omega_max}]: stationary {stationary!r}, secular {secular!r}")
    return W2Density(stationary=stationary, secular_coeff=secular, omega_max=omega_max)


def w2_stationary_integrand_k_route(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> Tuple[float, float]:
    """Per-polarization W2 stationary integrand from the diagonal limit of the k-space double integral

    Returns (radial-quadrature value, closed-form value).
    """
    trace = regularized_propagator_trace(m, omega, q)
    weight = omega ** 2 * np.imag(eval_permittivity(m, omega)) / (8 * math.pi ** 4)
    k_route = weight * 0.5 * (-trace.dg_quadrature.real)
    closed = float(_w2_stationary_integrand(m, omega)) / (8 * math.pi ** 2)
    return float(k_route), closed


def secular_cancellation_shared_nodes(m: MediumParams, omega_max: float, nodes: NodeSet = None) -> Tuple[float, float]:
    """Both secular coefficients on one fixed node set"""
    if nodes is None:
        nodes = gauss_legendre_nodes(0.0, omega_max, _breakpoints(m, omega_max))
    prefactor = POLARIZATIONS / (4 * math.pi ** 2)
    w1 = prefactor * nodes.integrate(lambda w: _w1_secular_integrand(m, w))
    w2 = prefactor * nodes.integrate(lambda w: _w2_secular_integrand(m, w))
    return w1, w2


def final_form_density(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD) -> float:
    """(1/2 pi^2) int w^3 n_r^2 d(w n_r)/dw"""
    def integrand(w):
        n_r = refractive_index(m, w).n_r
        return w ** 3 * n_r ** 2 * (n_r + w * d_omega_n_r(m, w))

    return _band(m, omega_max, q, integrand) / (2 * math.pi ** 2)


@dataclass(frozen=True)
class ModeSumResult:
    value: float
    anomalous_dispersion: bool
    min_group_index: float


def mode_sum_density(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD) -> ModeSumResult:
    """Zero-point density from hbar w/2 per mode with wavenumber k = n_r w"""
    def wavenumber(w):
        return np.real(np.sqrt(eval_permittivity(m, w) + 0j)) * w

    def dk_domega(w):
        root = np.sqrt(eval_permittivity(m, w) + 0j)
        return np.real(root + w * d_omega_permittivity(m, w) / (2 * root))

    def mode_density(w):
        k = wavenumber(w)
        return k * k * dk_domega(w) * w / 2

    value = POLARIZATIONS * 4 * math.pi / (2 * math.pi) ** 3 * _band(m, omega_max, q, mode_density)

    lo = 1e-3 * min(m.omega0, omega_max)
    coarse = np.linspace(lo, omega_max, 2000)
    fine = np.linspace(max(lo, m.omega0 - 20 * m.gamma),
                       min(omega_max, longitudinal_frequency(m) + 20 * m.gamma), 4000)
    scan = np.unique(np.concatenate((coarse, fine[fine > lo])))
    slope = dk_domega(scan)
    anomalous = bool(np.any(slope < 0))
    if anomalous:
        logger.warning(f"d(w n_r)/dw < 0 inside [0, {omega_max}] (min {slope.min():.4g}); "
                       f"mode counting breaks down in the anomalous-dispersion band")
    return ModeSumResult(value=value, anomalous_dispersion=anomalous, min_group_index=float(slope.min()))


@dataclass(frozen=True)
class BraceCheck:
    omega: float
    brace: float
    expected: float
    residual: float


def brace_identity(m: MediumParams, omega: float) -> BraceCheck:
    """Polarization-summed absorption brace against 4 n_r^2 d(w n_r)/dw"""
    eps = complex(eval_permittivity(m, omega))
    d_eps = complex(d_omega_permittivity(m, omega))
    root = np.sqrt(eps)
    d_root = d_eps / (2 * root)
    n_r = root.real

    work = n_r * (eps.real + omega * d_eps.real)
    magnetic = (eps ** 1.5).real
    absorption = eps.imag / omega * (2 * omega * root + omega ** 2 * d_root).imag
    brace = POLARIZATIONS * (work + magnetic + absorption)

    expected = 4 * n_r ** 2 * (n_r + omega * float(d_omega_n_r(m, omega)))
    scale = POLARIZATIONS * (abs(work) + abs(magnetic) + abs(absorption)) + abs(expected)
    return BraceCheck(omega=float(omega), brace=float(brace), expected=float(expected),
                      residual=abs(brace - expected) / scale)


def decomposition_check(m: MediumParams, omega_max: float, w1: W1Density, w2: W2Density,
                        q: QuadSpec = DEFAULT_QUAD) -> float:
    """Relative residual of W1 + W2 stationary parts against a direct complex evaluation of the brace"""
    def integrand(w):
        eps = eval_permittivity(m, w) + 0j
        d_eps = d_omega_permittivity(m, w)
        root = np.sqrt(eps)
        first = np.real(root.real * (eps + w * d_eps) + eps ** 1.5)
        second = np.imag(eps) / w * np.imag(2 * w * root + w ** 2 * d_eps / (2 * root))
        return w ** 3 * (first + second)

    direct = POLARIZATIONS / (8 * math.pi ** 2) * _band(m, omega_max, q, integrand)
    combined = w1.stationary + w2.stationary
    return abs(combined - direct) / abs(direct)


@dataclass(frozen=True)
class EnergyReport:
    w1_stationary: float
    w1_stationary_electric: float
    w1_stationary_magnetic: float
    w1_secular_coeff: float
    w2_stationary: float
    w2_secular_coeff: float
    w_total: float
    w_final_form: float
    w_mode_sum: float
    cancellation_residual: float
    identity_residual: float
    route_residual: float
    decomposition_residual: float
    tail_fraction: float
    anomalous_dispersion: bool
    omega_max: float
    medium: MediumParams

    def to_row(self) -> Dict[str, Any]:
        row = {k: v for k, v in asdict(self).items() if k != 'medium'}
        row['anomalous_dispersion'] = int(self.anomalous_dispersion)
        for key, value in self.medium.to_dict().items():
            row[f"medium_{key}"] = value
        return row

    def to_text(self) -> str:
        lines = [f"Energy density on [0, {self.omega_max:g}] for {self.medium}"]
        for key, value in self.to_row().items():
            if key.startswith('medium_') or key == 'omega_max':
                continue
            lines.append(f"  {key:<24} {value!r}")
        return "\n".join(lines)


def total_energy_density(m: MediumParams, omega_max: float, q: QuadSpec = DEFAULT_QUAD,
                         tail_fraction_limit: float = Config.TAIL_FRACTION_LIMIT) -> EnergyReport:
    """Band-limited zero-temperature energy density by three routes"""
    try:
        fraction = _check_band(m, omega_max, q, tail_fraction_limit)
        w1 = w1_density(m, omega_max, q, tail_fraction_limit)
        w2 = w2_density(m, omega_max, q, tail_fraction_limit)
        w_total = w1.stationary + w2.stationary
        w_final = final_form_density(m, omega_max, q)
        mode_sum = mode_sum_density(m, omega_max, q)

        if w1.secular_coeff == 0:
            cancellation = abs(w2.secular_coeff)
        else:
            cancellation = abs(w1.secular_coeff + w2.secular_coeff) / abs(w1.secular_coeff)

        report = EnergyReport(
            w1_stationary=w1.stationary,
            w1_stationary_electric=w1.stationary_electric,
            w1_stationary_magnetic=w1.stationary_magnetic,
            w1_secular_coeff=w1.secular_coeff,
            w2_stationary=w2.stationary,
            w2_secular_coeff=w2.secular_coeff,
            w_total=w_total,
            w_final_form=w_final,
            w_mode_sum=mode_sum.value,
            cancellation_residual=cancellation,
            identity_residual=abs(w_total - mode_sum.value) / abs(mode_sum.value),
            route_residual=abs(w_total - w_final) / abs(w_final),
            decomposition_residual=decomposition_check(m, omega_max, w1, w2, q),
            tail_fraction=fraction,
            anomalous_dispersion=mode_sum.anomalous_dispersion,
            omega_max=omega_max,
            medium=m,
        )
        logger.info(f"Energy density for {m}: W={w_total!r}, mode sum={mode_sum.value!r}, "
                    f"identity residual {report.identity_residual:.3g}")
        return report
    except Exception as e:
        logger.error(f"Error computing energy density for {m}: {str(e)}")
        raise


def energy_integrand(m: MediumParams, grid, kind: str) -> SpectralDensity:
    """Stationary W1 or W2 integrand per unit frequency, both polarizations"""
    w = np.asarray(grid, dtype=float)
    prefactor = POLARIZATIONS / (8 * math.pi ** 2)
    if kind == 'integrand-W1':
        magnetic = w ** 3 * np.real(refractive_index(m, w).value ** 3)
        values = prefactor * (_w1_electric_integrand(m, w) + magnetic)
    elif kind == 'integrand-W2':
        values = prefactor * _w2_stationary_integrand(m, w)
    else:
        raise DomainError(f"kind must be integrand-W1 or integrand-W2, got {kind}", field='kind')
    return SpectralDensity(grid=w, values=values, kind=kind, metadata={'medium': m.to_dict()})
