import math
from dataclasses import dataclass, field
from typing import Dict, Any, Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.special import sici

from services.medium_models import (
    MediumParams, bose_occupation, d_omega_index, d_omega_permittivity, eval_permittivity,
    refractive_index,
)
from services.quadrature import QuadSpec, DEFAULT_QUAD, integrate, integrate_oscillatory
from utils.errors import DivergenceError, DomainError, UnsupportedRegimeError
from utils.logger import get_logger

logger = get_logger(__name__)

ORDERINGS = ('normal', 'antinormal')
KINDS = ('electric', 'magnetic', 'noise-K', 'integrand-W1', 'integrand-W2')
NON_NEGATIVE_KINDS = ('electric', 'noise-K')

# radial cutoff in units of |n| w
K_MAX_FACTOR = 50.0


@dataclass(frozen=True)
class XPCommutatorResult:
    """[x(t), p(t')] in units of i hbar"""
    quadrature_value: float
    closed_form_value: float
    omega1: float
    tau: float

    @property
    def deviation(self) -> float:
        return abs(self.quadrature_value - self.closed_form_value)


def xp_commutator(m: MediumParams, tau: float, omega_max: Optional[float] = None,
                  q: QuadSpec = DEFAULT_QUAD) -> XPCommutatorResult:
    if m.gamma >= 2 * m.omega0:
        raise UnsupportedRegimeError(f"Overdamped oscillator (gamma={m.gamma} >= 2*omega0={2 * m.omega0})")

    w0, g = m.omega0, m.gamma
    omega1 = math.sqrt(w0 ** 2 - g ** 2 / 4)
    t = abs(tau)
    closed = (math.cos(omega1 * t) - g / (2 * omega1) * math.sin(omega1 * t)) * math.exp(-g * t / 2)

    top = 1e3 * w0 if omega_max is None else omega_max

    def response(w):
        return w * w / ((w0 ** 2 - w * w) ** 2 + g ** 2 * w * w)

    points = [w0 - 5 * g, w0, w0 + 5 * g, 4 * w0]
    if t == 0:
        body = integrate(response, 0.0, top, q, points=points).value
        tail = 1.0 / top + (2 * w0 ** 2 - g ** 2) / (3 * top ** 3)
    else:
        body = integrate_oscillatory(response, 0.0, top, t, 'cos', q, points=points).value
        si, _ = sici(t * top)
        tail = math.cos(t * top) / top - t * (math.pi / 2 - si)

    value = 2 * g / math.pi * (body + tail)
    logger.debug(f"[x, p] at tau={tau}: quadrature {value!r}, closed form {closed!r}")
    return XPCommutatorResult(quadrature_value=value, closed_form_value=closed, omega1=omega1, tau=float(tau))


@dataclass(frozen=True)
class NoiseCorrelator:
    """Noise-polarization correlator weight per unit delta(w - w') delta^3(r - r')"""
    amplitude: float
    ordering: str
    temperature: float
    omega: float
    commutator: float


def noise_correlator(m: MediumParams, omega: float, ordering: str = 'normal',
                     temperature: Optional[float] = None) -> NoiseCorrelator:
    """4 eps_I n for normal ordering, 4 eps_I (n + 1) for antinormal ordering"""
    if ordering not in ORDERINGS:
        raise DomainError(f"ordering must be one of {ORDERINGS}, got {ordering}", field='ordering')
    temp = m.temperature if temperature is None else temperature
    commutator = 4.0 * float(np.imag(eval_permittivity(m, omega)))
    occupation = float(bose_occupation(omega, temp))
    amplitude = commutator * occupation if ordering == 'normal' else commutator * (occupation + 1.0)
    return NoiseCorrelator(amplitude=amplitude, ordering=ordering, temperature=temp, omega=float(omega),
                           commutator=commutator)


@dataclass(frozen=True)
class RadialIntegral:
    omega: float
    closed_form: float
    quadrature: float
    k_max: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.quadrature - self.closed_form) / abs(self.closed_form)


@dataclass(frozen=True)
class _Radial:
    s: complex
    z: complex
    k_max: float

    def far_factor(self, k):
        """|k + s|^2, the part of the denominator without the peak"""
        return (k + self.s.real) ** 2 + self.s.imag ** 2


# breakpoints in the angle variable sit at k = Re(s) +/- 10^j Im(s)
_ANGLE_BREAKS = tuple(sign * math.atan(10.0 ** j) for j in range(-2, 17) for sign in (-1.0, 1.0))


def _radial_quad(r: _Radial, reduced, q: QuadSpec) -> float:
    """Integral over [0, k_max] of reduced(k, x)/(x^2 + Im(s)^2) with x = k - Re(s)

    Substituting k = Re(s) + Im(s) tan(t) absorbs the Lorentzian factor, so the peak of width
    Im(s) becomes a smooth integrand in t for any loss.
    """
    sr, si = r.s.real, r.s.imag
    t_lo = math.atan2(-sr, si)
    t_hi = math.atan2(r.k_max - sr, si)

    def integrand(t):
        x = si * math.tan(t)
        return reduced(sr + x, x) / si

    return integrate(integrand, t_lo, t_hi, q, points=_ANGLE_BREAKS).value


def _radial_quad_complex(r: _Radial, reduced, q: QuadSpec) -> complex:
    re = _radial_quad(r, lambda k, x: reduced(k, x).real, q)
    im = _radial_quad(r, lambda k, x: reduced(k, x).imag, q)
    return complex(re, im)


def _radial(m: MediumParams, omega: float) -> _Radial:
    n = refractive_index(m, omega)
    if not n.n_i > 0:
        raise DivergenceError(f"k-integral diverges for a lossless medium at omega={omega} (n_i={n.n_i}); "
                              f"the pole k = n_r w sits on the real axis")
    s = complex(n.n_r, n.n_i) * omega
    k_max = K_MAX_FACTOR * max(1.0, abs(complex(n.n_r, n.n_i))) * omega
    return _Radial(s=s, z=s * s, k_max=k_max)


def k_integral(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> RadialIntegral:
    """Integral of d^3k |k^2 - eps w^2|^-2: residue form pi^2/(w n_i) and radial quadrature"""
    r = _radial(m, omega)
    a, b = r.z.real, abs(r.z) ** 2
    closed = math.pi ** 2 / r.s.imag

    body = _radial_quad(r, lambda k, x: k * k / r.far_factor(k), q)
    K = r.k_max
    tail = 1 / K + 2 * a / (3 * K ** 3) + (4 * a * a - b) / (5 * K ** 5)
    value = 4 * math.pi * (body + tail)
    return RadialIntegral(omega=float(omega), closed_form=closed, quadrature=value, k_max=K)


def k_squared_integral(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> RadialIntegral:
    """Integral of d^3k k^2 |k^2 - eps w^2|^-2 with the contact term 4 pi k_max removed"""
    r = _radial(m, omega)
    a, b = r.z.real, abs(r.z) ** 2
    closed = math.pi ** 2 * (r.s ** 3).real / (r.s.real * r.s.imag)

    body = _radial_quad(r, lambda k, x: (2 * a * k * k - b) / r.far_factor(k), q)
    K = r.k_max
    tail = 2 * a / K + (4 * a * a - b) / (3 * K ** 3) + (8 * a ** 3 - 4 * a * b) / (5 * K ** 5)
    value = 4 * math.pi * (body + tail)
    return RadialIntegral(omega=float(omega), closed_form=closed, quadrature=value, k_max=K)


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral density at one frequency, per polarization, by two routes"""
    omega: float
    closed_form: float
    quadrature: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.quadrature - self.closed_form) / abs(self.closed_form)


def electric_spectral_density(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> SpectralPoint:
    """S_E = (1/2 pi^3) eps_I w^4 * k_integral, which reduces to w^3 n_r / pi"""
    eps_i = float(np.imag(eval_permittivity(m, omega)))
    radial = k_integral(m, omega, q)
    n = refractive_index(m, omega)
    return SpectralPoint(
        omega=float(omega),
        closed_form=omega ** 3 * n.n_r / math.pi,
        quadrature=eps_i * omega ** 4 * radial.quadrature / (2 * math.pi ** 3),
    )


def magnetic_spectral_density(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> SpectralPoint:
    """S_H = (1/2 pi^3) eps_I w^2 * regularized k^2 integral, which reduces to w^3 Re(n^3) / pi"""
    eps_i = float(np.imag(eval_permittivity(m, omega)))
    radial = k_squared_integral(m, omega, q)
    n = complex(*_pair(refractive_index(m, omega)))
    return SpectralPoint(
        omega=float(omega),
        closed_form=omega ** 3 * (n ** 3).real / math.pi,
        quadrature=eps_i * omega ** 2 * radial.quadrature / (2 * math.pi ** 3),
    )


def _pair(index):
    return float(index.n_r), float(index.n_i)


def electric_closed_form(m: MediumParams, omega):
    return np.asarray(omega) ** 3 * refractive_index(m, omega).n_r / math.pi


def magnetic_closed_form(m: MediumParams, omega):
    n = refractive_index(m, omega).value
    return np.real(np.asarray(omega) ** 3 * n ** 3) / math.pi


def thermal_electric_spectral_density(m: MediumParams, omega, ordering: str = 'normal',
                                      temperature: Optional[float] = None):
    """Thermally weighted S_E: S_E n for normal, S_E (n + 1) for antinormal ordering"""
    if ordering not in ORDERINGS:
        raise DomainError(f"ordering must be one of {ORDERINGS}, got {ordering}", field='ordering')
    temp = m.temperature if temperature is None else temperature
    occupation = bose_occupation(omega, temp)
    weight = occupation if ordering == 'normal' else occupation + 1.0
    return electric_closed_form(m, omega) * weight


@dataclass(frozen=True)
class PropagatorTrace:
    """G(w) = int d^3k [1/(k^2 - z) - 1/k^2] and d/dw [w G(w)]"""
    omega: float
    g_closed: complex
    g_quadrature: complex
    dg_closed: complex
    dg_quadrature: complex


def regularized_propagator_trace(m: MediumParams, omega: float, q: QuadSpec = DEFAULT_QUAD) -> PropagatorTrace:
    r = _radial(m, omega)
    n = complex(*_pair(refractive_index(m, omega)))
    dn = complex(d_omega_index(m, omega))
    eps = complex(eval_permittivity(m, omega))
    z, s, K = r.z, r.s, r.k_max
    dz = complex(d_omega_permittivity(m, omega)) * omega ** 2 + 2 * eps * omega
    si = s.imag

    g_closed = 2j * math.pi ** 2 * n * omega
    dg_closed = 2j * math.pi ** 2 * (2 * omega * n + omega ** 2 * dn)

    # k^2 - conj(z) = (x + i si)(k + sr - i si) with x = k - sr
    def g_reduced(k, x):
        return z * complex(x, si) * (k + s.conjugate()) / r.far_factor(k)

    def dg_reduced(k, x):
        return k * k * complex(x, si) / complex(x, -si) * (k + s.conjugate()) ** 2 / r.far_factor(k) ** 2

    g_quad = 4 * math.pi * (_radial_quad_complex(r, g_reduced, q) + z / K + z * z / (3 * K ** 3))
    second = _radial_quad_complex(r, dg_reduced, q) + 1 / K + 2 * z / (3 * K ** 3) + 3 * z * z / (5 * K ** 5)
    dg_quad = g_quad + omega * dz * 4 * math.pi * second
    logger.debug(f"Propagator trace at w={omega}: s={s}, G={g_quad}, d(wG)={dg_quad}")
    return PropagatorTrace(omega=float(omega), g_closed=g_closed, g_quadrature=g_quad,
                           dg_closed=dg_closed, dg_quadrature=dg_quad)


@dataclass(frozen=True)
class SpectralDensity:
    """Tabulated function of w"""
    grid: np.ndarray
    values: np.ndarray
    kind: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind}", field='kind')
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise DomainError("grid and values must be 1-D arrays of equal length")
        if len(grid) > 1 and not np.all(np.diff(grid) > 0):
            raise DomainError("grid must be strictly ascending", field='grid')
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{self.kind} density has non-finite values", field='values')
        if self.kind in NON_NEGATIVE_KINDS and np.any(values < 0):
            raise DomainError(f"{self.kind} density has negative values", field='values')
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'values', values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'omega': self.grid, 'value': self.values, 'kind': self.kind})

    def integrate(self) -> float:
        return float(trapezoid(self.values, self.grid))


def spectral_density(m: MediumParams, grid, kind: str, q: QuadSpec = DEFAULT_QUAD,
                     check_quadrature: bool = False) -> SpectralDensity:
    """Field or noise spectral density on a grid; optionally cross-checked against radial quadrature"""
    w = np.asarray(grid, dtype=float)
    metadata: Dict[str, Any] = {'medium': m.to_dict(), 'quadrature': {
        'rel_tol': q.rel_tol, 'abs_tol': q.abs_tol, 'max_subdivisions': q.max_subdivisions}}

    try:
        if kind == 'electric':
            values = electric_closed_form(m, w)
            route = electric_spectral_density
        elif kind == 'magnetic':
            values = magnetic_closed_form(m, w)
            route = magnetic_spectral_density
        elif kind == 'noise-K':
            values = np.array([noise_correlator(m, wi, 'antinormal').amplitude for wi in w])
            route = None
        else:
            raise DomainError(f"spectral_density builds electric, magnetic or noise-K, got {kind}", field='kind')

        if check_quadrature and route is not None and not m.is_vacuum:
            deviations = [route(m, wi, q).relative_deviation for wi in w]
            metadata['max_quadrature_deviation'] = float(max(deviations))
            logger.info(f"{kind} density: max closed-form/quadrature deviation {max(deviations):.3g}")

        return SpectralDensity(grid=w, values=values, kind=kind, metadata=metadata)
    except Exception as e:
        logger.error(f"Error building {kind} spectral density: {str(e)}")
        raise
