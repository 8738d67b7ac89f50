import math
from dataclasses import dataclass, asdict, replace, field
from typing import Callable, Dict, Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import eigh
from scipy.optimize import bisect

from services.medium_models import bose_occupation
from services.quadrature import (
    QuadSpec, DEFAULT_QUAD, integrate, integrate_oscillatory, integrate_pv,
)
from utils.errors import DomainError, UnsupportedRegimeError
from utils.logger import get_logger

logger = get_logger(__name__)

# Survival level below which the decay is no longer compared with an exponential
SURVIVAL_FLOOR = 1e-3


@dataclass(frozen=True)
class OscillatorModel:
    """Oscillator coupled to a flat reservoir in the rotating-wave approximation"""
    omega0: float = 1.0
    gamma: float = 0.01
    omega_cut: float = 101.0
    temperature: float = 0.0
    include_shift: bool = True
    rwa_band: float = 0.5

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError(f"omega0 must be > 0, got {self.omega0}", field='omega0')
        if not 0 < self.gamma <= self.omega0 / 10:
            raise DomainError(f"gamma must satisfy 0 < gamma <= omega0/10, got {self.gamma}", field='gamma')
        if not self.omega_cut > 10 * self.omega0:
            raise DomainError(f"omega_cut must exceed 10*omega0, got {self.omega_cut}", field='omega_cut')
        if not self.temperature >= 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature}", field='temperature')
        if not 0 < self.rwa_band < 1:
            raise DomainError(f"rwa_band must lie in (0, 1), got {self.rwa_band}", field='rwa_band')

    @staticmethod
    def from_cfg(cfg: Dict[str, Any]) -> "OscillatorModel":
        defaults = OscillatorModel()
        include_shift = cfg.get('include_shift', defaults.include_shift)
        if isinstance(include_shift, str):
            include_shift = include_shift.strip().lower() in ('1', 'true', 'yes', 'on')
        return OscillatorModel(
            omega0=float(cfg.get('omega0', defaults.omega0)),
            gamma=float(cfg.get('gamma', defaults.gamma)),
            omega_cut=float(cfg.get('omega_cut', defaults.omega_cut)),
            temperature=float(cfg.get('temperature', defaults.temperature)),
            include_shift=bool(include_shift),
            rwa_band=float(cfg.get('rwa_band', defaults.rwa_band)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def coupling(self) -> float:
        return math.sqrt(self.gamma / math.pi)

    @property
    def band(self) -> Tuple[float, float]:
        return (self.omega0 * (1 - self.rwa_band), min(self.omega0 * (1 + self.rwa_band), self.omega_cut))


# Band-limited helpers; the cutoff is explicit so a reservoir grid can reuse them

def _shift(m: OscillatorModel, omega, cutoff: float, include_shift: bool):
    if not include_shift:
        return np.zeros_like(np.asarray(omega, dtype=float)) if np.ndim(omega) else 0.0
    w = np.asarray(omega, dtype=float)
    # band edges give an infinite shift and a vanishing filter
    with np.errstate(divide='ignore', invalid='ignore'):
        value = (m.gamma / math.pi) * np.log((cutoff - w) / w)
    return value if np.ndim(omega) else float(value)


def _filter(m: OscillatorModel, omega, cutoff: float, include_shift: bool):
    detuning = np.asarray(omega, dtype=float) - m.omega0 + _shift(m, omega, cutoff, include_shift)
    return (m.gamma / math.pi) / (detuning ** 2 + m.gamma ** 2)


def _root(m: OscillatorModel, cutoff: float, include_shift: bool) -> float:
    if not include_shift:
        return m.omega0

    def detuning(w):
        return w - m.omega0 + _shift(m, w, cutoff, True)

    hi = m.omega0
    lo = m.omega0 / 2
    while detuning(lo) >= 0:
        lo /= 2
        if lo < 1e-12 * m.omega0:
            raise UnsupportedRegimeError("No bracket for the shifted resonance below omega0")
    return float(bisect(detuning, lo, hi, xtol=1e-12 * m.omega0, maxiter=400))


def _check_frequency(m: OscillatorModel, omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0) or np.any(w >= m.omega_cut):
        raise DomainError(f"Frequency must lie in (0, omega_cut={m.omega_cut}), got {omega}", field='Omega')


def frequency_shift(m: OscillatorModel, Omega):
    """Cut-off frequency shift (gamma/pi) ln((w_c - W)/W); zero when the shift is renormalized away"""
    _check_frequency(m, Omega)
    return _shift(m, Omega, m.omega_cut, m.include_shift)


def frequency_shift_quadrature(m: OscillatorModel, Omega: float, q: QuadSpec = DEFAULT_QUAD) -> float:
    """Same shift as a principal-value integral over (0, w_c)"""
    _check_frequency(m, Omega)
    if not m.include_shift:
        return 0.0
    weight = m.gamma / math.pi
    return integrate_pv(lambda w: weight, Omega, 0.0, m.omega_cut, q)


def resonance_root(m: OscillatorModel) -> float:
    """Root of W - w0 + Delta(W) near w0 (bisection)"""
    return _root(m, m.omega_cut, m.include_shift)


def langevin_amplitude(m: OscillatorModel, Omega):
    """A(W) = sqrt(gamma/pi) / (W - w0 + Delta(W) + i gamma)"""
    delta = frequency_shift(m, Omega)
    return m.coupling / (np.asarray(Omega, dtype=float) - m.omega0 + delta + 1j * m.gamma)


def commutator_norm(m: OscillatorModel, q: QuadSpec = DEFAULT_QUAD) -> float:
    """Equal-time [a, a^dagger] from the Lorentzian weight over (0, w_c)"""
    peak = resonance_root(m)
    result = integrate(lambda w: _filter(m, w, m.omega_cut, m.include_shift), 0.0, m.omega_cut, q,
                       points=[peak, m.omega0])
    logger.debug(f"Commutator norm {result.value!r} for {m}")
    return result.value


def commutator_norm_closed_form(m: OscillatorModel) -> float:
    """Unshifted Lorentzian weight on (0, w_c)"""
    return (math.atan((m.omega_cut - m.omega0) / m.gamma) + math.atan(m.omega0 / m.gamma)) / math.pi


@dataclass(frozen=True)
class FanoCoefficients:
    """Dressed-mode coefficients at one frequency W"""
    Omega: float
    alpha: complex
    f_value: float
    delta_shift: float
    coupling: float

    @property
    def beta_singular(self) -> complex:
        return self.alpha * self.f_value

    @property
    def modulus_squared(self) -> float:
        return abs(self.alpha) ** 2

    def beta_smooth(self, omega):
        """Principal-value kernel -sqrt(gamma/pi) alpha / (w - W)"""
        return -self.coupling * self.alpha / (np.asarray(omega, dtype=float) - self.Omega)


def fano_coefficients(m: OscillatorModel, Omega: float) -> FanoCoefficients:
    delta = frequency_shift(m, Omega)
    detuning = Omega - m.omega0 + delta
    return FanoCoefficients(
        Omega=float(Omega),
        alpha=m.coupling / (detuning - 1j * m.gamma),
        f_value=math.sqrt(math.pi / m.gamma) * detuning,
        delta_shift=float(delta),
        coupling=m.coupling,
    )


@dataclass(frozen=True)
class DiscretizedBath:
    """Arrowhead Hamiltonian in the one-excitation basis (a, b_1, ..., b_N)"""
    omega0: float
    gamma: float
    frequencies: np.ndarray
    couplings: np.ndarray
    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    warnings: Tuple[str, ...] = ()

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def delta_omega(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    @property
    def omega_max(self) -> float:
        return self.delta_omega * self.n_modes

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.delta_omega

    def orthogonality_error(self) -> float:
        o = self.eigenvectors
        return float(np.max(np.abs(o.T @ o - np.eye(o.shape[0]))))

    def coupling_sum(self) -> float:
        return float(np.sum(self.couplings ** 2))


def build_bath(m: OscillatorModel, n_modes: int, omega_max: float) -> DiscretizedBath:
    """Midpoint reservoir grid with couplings sqrt(gamma dw / pi), diagonalized once"""
    if int(n_modes) != n_modes or n_modes < 2:
        raise DomainError(f"n_modes must be an integer >= 2, got {n_modes}", field='n_modes')
    if not omega_max >= 4 * m.omega0:
        raise DomainError(f"omega_max must be >= 4*omega0, got {omega_max}", field='omega_max')

    n_modes = int(n_modes)
    dw = omega_max / n_modes
    frequencies = (np.arange(1, n_modes + 1) - 0.5) * dw
    couplings = np.full(n_modes, math.sqrt(m.gamma * dw / math.pi))

    hamiltonian = np.diag(np.concatenate(([m.omega0], frequencies)))
    hamiltonian[0, 1:] = couplings
    hamiltonian[1:, 0] = couplings

    notes: List[str] = []
    if dw > m.gamma / 5:
        notes.append(f"grid spacing {dw:.4g} exceeds gamma/5; Lorentzian of width {m.gamma} is under-resolved")
        logger.warning(notes[-1])

    logger.info(f"Diagonalizing {n_modes + 1}x{n_modes + 1} arrowhead Hamiltonian (dw={dw:.4g})")
    eigenvalues, eigenvectors = eigh(hamiltonian)

    for array in (frequencies, couplings, hamiltonian, eigenvalues, eigenvectors):
        array.setflags(write=False)

    return DiscretizedBath(
        omega0=m.omega0,
        gamma=m.gamma,
        frequencies=frequencies,
        couplings=couplings,
        hamiltonian=hamiltonian,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        warnings=tuple(notes),
    )


@dataclass(frozen=True)
class HeisenbergEvolution:
    time: float
    coefficients: np.ndarray
    warnings: Tuple[str, ...] = ()

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    @property
    def survival(self) -> float:
        return float(abs(self.coefficients[0]) ** 2)


def evolve_heisenberg(b: DiscretizedBath, t: float) -> HeisenbergEvolution:
    """u(t) = O exp(-i Lambda t) O^T e_0, so a(t) = u_0 a(0) + sum_k u_k b_k(0)"""
    if not t >= 0:
        raise DomainError(f"Time must be >= 0, got {t}", field='t')
    o = b.eigenvectors
    u = o @ (np.exp(-1j * b.eigenvalues * t) * o[0, :])
    notes = []
    if t > b.recurrence_time / 2:
        notes.append(f"t={t:.4g} exceeds half the recurrence time {b.recurrence_time / 2:.4g}")
        logger.warning(notes[-1])
    return HeisenbergEvolution(time=float(t), coefficients=u, warnings=tuple(notes))


def survival_probabilities(b: DiscretizedBath, times) -> np.ndarray:
    """|u_0(t)|^2 on a grid of times"""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    weights = b.eigenvectors[0, :] ** 2
    amplitudes = np.exp(-1j * np.outer(t, b.eigenvalues)) @ weights
    return np.abs(amplitudes) ** 2


def eigen_occupation(b: DiscretizedBath, temperature: float, band: Optional[Tuple[float, float]] = None) -> float:
    """Stationary <a^dagger a> from dressed modes occupied thermally"""
    if temperature == 0:
        return 0.0
    lam = b.eigenvalues
    weights = b.eigenvectors[0, :] ** 2
    mask = lam > 0
    if band is not None:
        mask &= (lam >= band[0]) & (lam <= band[1])
    return float(np.sum(weights[mask] * bose_occupation(lam[mask], temperature)))


def continuum_occupation(m: OscillatorModel, temperature: Optional[float] = None, cutoff: Optional[float] = None,
                         q: QuadSpec = DEFAULT_QUAD,
                         distribution: Optional[Callable[[float], float]] = None) -> float:
    """Lorentzian filter times an occupation over the rotating-wave band (0 < w < cutoff)

    The occupation defaults to the Bose factor at `temperature`; any other distribution enters
    the same filter unchanged.
    """
    cutoff = m.omega_cut if cutoff is None else cutoff
    temp = m.temperature if temperature is None else temperature
    if distribution is None:
        if temp == 0:
            return 0.0

        def distribution(w):
            return bose_occupation(w, temp)

    lo, hi = m.omega0 * (1 - m.rwa_band), min(m.omega0 * (1 + m.rwa_band), cutoff)
    peak = _root(m, cutoff, m.include_shift)

    def integrand(w):
        return _filter(m, w, cutoff, m.include_shift) * distribution(w)

    return integrate(integrand, lo, hi, q, points=[peak, m.omega0]).value


def steady_state_occupation(m: OscillatorModel, q: QuadSpec = DEFAULT_QUAD,
                            distribution: Optional[Callable[[float], float]] = None) -> float:
    """Thermal <a^dagger a> through the Lorentzian filter over the rotating-wave band"""
    value = continuum_occupation(m, q=q, distribution=distribution)
    logger.debug(f"Steady-state occupation {value!r} at T={m.temperature}")
    return value


def continuum_survival(m: OscillatorModel, t: float, cutoff: Optional[float] = None,
                       include_shift: Optional[bool] = None, q: QuadSpec = DEFAULT_QUAD) -> float:
    """|integral of |alpha|^2 exp(-i W t) dW|^2 over the band (0, cutoff)"""
    cutoff = m.omega_cut if cutoff is None else cutoff
    include_shift = m.include_shift if include_shift is None else include_shift
    peak = _root(m, cutoff, include_shift)

    def weight(w):
        return _filter(m, w, cutoff, include_shift)

    points = [peak, m.omega0]
    re = integrate_oscillatory(weight, 0.0, cutoff, t, 'cos', q, points=points).value
    im = integrate_oscillatory(weight, 0.0, cutoff, t, 'sin', q, points=points).value
    return re * re + im * im


def comparison_times(m: OscillatorModel, b: DiscretizedBath, points: int = 25) -> np.ndarray:
    """Two transient points followed by a grid over the steady-state comparison window"""
    start, stop = comparison_window(m, b)
    return np.concatenate(([0.0, 1.0 / m.gamma], np.linspace(start, stop, points)))


def comparison_window(m: OscillatorModel, b: DiscretizedBath) -> Tuple[float, float]:
    start = 2.0 / m.gamma
    floor_time = math.log(1.0 / SURVIVAL_FLOOR) / (2 * m.gamma)
    return start, min(0.4 * b.recurrence_time, floor_time)


@dataclass(frozen=True)
class LangevinFanoComparison:
    times: np.ndarray
    survival_eigen: np.ndarray
    survival_continuum: np.ndarray
    survival_exponential: np.ndarray
    in_window: np.ndarray
    temperature: float
    occupation_eigen: float
    occupation_continuum: float
    occupation_bose: float
    occupation_resonance: float
    include_shift: bool
    max_decay_deviation: float
    max_continuum_deviation: float
    occupation_deviation: float
    steady_state_gate: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def continuum_occupation_deviation(self) -> float:
        """Dressed-mode occupation against the filtered continuum prediction with the same shift"""
        if self.occupation_continuum == 0:
            return 0.0 if self.occupation_eigen == 0 else float('inf')
        return abs(self.occupation_eigen / self.occupation_continuum - 1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'time': self.times,
            'survival_eigen': self.survival_eigen,
            'survival_continuum': self.survival_continuum,
            'survival_exponential': self.survival_exponential,
            'in_window': self.in_window.astype(int),
        })


def compare_langevin_fano(m: OscillatorModel, n_modes: int, omega_max: float, times: Optional[Sequence[float]] = None,
                          temperature: Optional[float] = None, q: QuadSpec = DEFAULT_QUAD,
                          bath: Optional[DiscretizedBath] = None) -> LangevinFanoComparison:
    """Exact diagonalization against the continuum (Langevin) prediction"""
    try:
        bath = bath or build_bath(m, n_modes, omega_max)
        notes = list(bath.warnings)
        t = comparison_times(m, bath) if times is None else np.asarray(times, dtype=float)
        if np.any(t > bath.recurrence_time / 2):
            notes.append(f"times beyond half the recurrence time {bath.recurrence_time / 2:.4g}")

        survival_eigen = survival_probabilities(bath, t)
        survival_continuum = np.array([continuum_survival(m, ti, cutoff=bath.omega_max, q=q)
                                       for ti in t])
        survival_exponential = np.exp(-2 * m.gamma * t)

        start, stop = comparison_window(m, bath)
        window = (t >= start * (1 - 1e-12)) & (t <= stop * (1 + 1e-12))
        if np.any(window):
            decay_dev = float(np.max(np.abs(survival_eigen[window] / survival_exponential[window] - 1)))
            cont_dev = float(np.max(np.abs(survival_eigen[window] / survival_continuum[window] - 1)))
        else:
            decay_dev = cont_dev = float('nan')
            notes.append("no time point inside the steady-state window")

        temp = m.temperature if temperature is None else temperature
        occ_eigen = eigen_occupation(bath, temp, band=(m.band[0], min(m.band[1], bath.omega_max)))
        occ_cont = continuum_occupation(m, temp, bath.omega_max, q)
        occ_bose = float(bose_occupation(m.omega0, temp))
        occ_resonance = float(bose_occupation(_root(m, bath.omega_max, m.include_shift), temp))
        occ_dev = 0.0 if occ_bose == 0 and occ_eigen == 0 else abs(occ_eigen / occ_bose - 1)

        logger.info(f"Langevin/Fano comparison: decay deviation {decay_dev:.3g}, "
                    f"occupation deviation {occ_dev:.3g} ({len(t)} times, {bath.n_modes} modes)")
        return LangevinFanoComparison(
            times=t,
            survival_eigen=survival_eigen,
            survival_continuum=survival_continuum,
            survival_exponential=survival_exponential,
            in_window=window,
            temperature=temp,
            occupation_eigen=occ_eigen,
            occupation_continuum=occ_cont,
            occupation_bose=occ_bose,
            occupation_resonance=occ_resonance,
            include_shift=m.include_shift,
            max_decay_deviation=decay_dev,
            max_continuum_deviation=cont_dev,
            occupation_deviation=occ_dev,
            steady_state_gate=start,
            warnings=tuple(notes),
        )
    except Exception as e:
        logger.error(f"Error comparing Langevin and Fano routes: {str(e)}")
        raise


@dataclass(frozen=True)
class TrialTrajectory:
    x: Callable[[float], float]
    xdot: Callable[[float], float]
    label: str


def windowed_sinusoid(frequency: float = 1.0, center: Optional[float] = None, width: float = 5.0) -> TrialTrajectory:
    """sin(w t) under a Gaussian window; default centre sits where tan(w t) = 1"""
    if center is None:
        center = (math.pi / 4 + 6 * math.pi) / frequency

    def x(t):
        return math.sin(frequency * t) * math.exp(-((t - center) / width) ** 2)

    def xdot(t):
        envelope = math.exp(-((t - center) / width) ** 2)
        return envelope * (frequency * math.cos(frequency * t)
                           - 2 * (t - center) / width ** 2 * math.sin(frequency * t))

    return TrialTrajectory(x=x, xdot=xdot, label=f"windowed sin (w={frequency}, t_c={center:.4g}, s={width})")


def constant_trajectory(value: float = 1.0) -> TrialTrajectory:
    return TrialTrajectory(x=lambda t: value, xdot=lambda t: 0.0, label=f"constant {value}")


@dataclass(frozen=True)
class KernelCheck:
    kernel_value: float
    expected: float
    omega_max: float
    shift_removed: float
    t_eval: float

    @property
    def deviation(self) -> float:
        return self.kernel_value - self.expected

    @property
    def relative_deviation(self) -> float:
        return abs(self.deviation) / abs(self.expected) if self.expected else float('inf')


def _sine_moment_kernel(omega_max: float, s: float) -> float:
    """Integral of w sin(w s) over w in [0, omega_max]"""
    y = omega_max * s
    if abs(y) < 1e-2:
        return omega_max ** 2 * (y / 3 - y ** 3 / 30 + y ** 5 / 840)
    return (math.sin(y) - y * math.cos(y)) / s ** 2


def damping_kernel_check(m: OscillatorModel, trajectory: TrialTrajectory, t_eval: float, omega_max: float,
                         q: QuadSpec = DEFAULT_QUAD) -> KernelCheck:
    """Memory integral -(2 gamma/pi) int dw w int dt' x(t') sin w(t'-t) against -gamma xdot(t)"""
    if not t_eval > 0:
        raise DomainError(f"t_eval must be > 0, got {t_eval}", field='t_eval')
    if not omega_max > 0:
        raise DomainError(f"omega_max must be > 0, got {omega_max}", field='omega_max')

    def integrand(tp):
        return trajectory.x(tp) * _sine_moment_kernel(omega_max, tp - t_eval)

    spacing = 8 * math.pi / omega_max
    points = list(np.arange(spacing, t_eval, spacing))
    if len(points) >= q.max_subdivisions // 2:
        q = replace(q, max_subdivisions=2 * len(points) + 50)
    inner = integrate(integrand, 0.0, t_eval, q, points=points).value

    prefactor = 2 * m.gamma / math.pi
    shift = prefactor * omega_max * trajectory.x(t_eval)
    kernel = -prefactor * inner - shift
    expected = -m.gamma * trajectory.xdot(t_eval)
    logger.debug(f"Damping kernel at t={t_eval}, w_max={omega_max}: {kernel!r} vs {expected!r}")
    return KernelCheck(kernel_value=kernel, expected=expected, omega_max=omega_max,
                       shift_removed=shift, t_eval=t_eval)
