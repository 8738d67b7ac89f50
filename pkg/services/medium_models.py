from dataclasses import dataclass, asdict, replace
from typing import Dict, Any, Union

import numpy as np
import pandas as pd

from utils.errors import DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

ArrayLike = Union[float, np.ndarray]

# log-spaced frequencies used for the passivity assertion
_PASSIVITY_GRID = np.logspace(-3, 3, 121)


def _check_omega(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DomainError(f"Frequency must be finite and > 0, got {omega}", field='omega')
    return w


def _as_output(values: np.ndarray, like):
    return values.item() if np.ndim(like) == 0 else values


@dataclass(frozen=True)
class MediumParams:
    """Single-resonance Lorentz dielectric, frequencies in units of the reference frequency"""
    omega0: float = 1.0
    omega_p: float = 0.5
    gamma: float = 0.1
    temperature: float = 0.0

    def __post_init__(self):
        checks = [
            ('omega0', self.omega0 > 0, 'must be > 0'),
            ('omega_p', self.omega_p >= 0, 'must be >= 0'),
            ('gamma', self.gamma > 0, 'must be > 0'),
            ('temperature', self.temperature >= 0, 'must be >= 0'),
        ]
        for field, ok, message in checks:
            value = getattr(self, field)
            if not np.isfinite(value) or not ok:
                raise DomainError(f"{field} {message}, got {value}", field=field)

        # Passivity on a sample grid
        eps_i = np.imag(_permittivity(self, _PASSIVITY_GRID * self.omega0))
        if self.omega_p > 0 and np.any(eps_i <= 0):
            raise DomainError("Medium is not passive: Im eps <= 0 on the sample grid", field='omega_p')

    @staticmethod
    def from_cfg(cfg: Dict[str, Any]) -> "MediumParams":
        defaults = MediumParams()
        return MediumParams(
            omega0=float(cfg.get('omega0', defaults.omega0)),
            omega_p=float(cfg.get('omega_p', defaults.omega_p)),
            gamma=float(cfg.get('gamma', defaults.gamma)),
            temperature=float(cfg.get('temperature', defaults.temperature)),
        )

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def with_updates(self, **changes) -> "MediumParams":
        return replace(self, **changes)

    @property
    def is_vacuum(self) -> bool:
        return self.omega_p == 0


@dataclass(frozen=True)
class ComplexIndex:
    """Refractive index n = n_r + i n_i (scalars or matching arrays)"""
    n_r: ArrayLike
    n_i: ArrayLike

    @property
    def value(self):
        return self.n_r + 1j * self.n_i

    @property
    def permittivity(self):
        return self.value ** 2

    @property
    def eps_r(self):
        return self.n_r ** 2 - self.n_i ** 2

    @property
    def eps_i(self):
        return 2 * self.n_r * self.n_i


def _denominator(m: MediumParams, w: np.ndarray) -> np.ndarray:
    return w ** 2 - m.omega0 ** 2 + 1j * m.gamma * w


def _permittivity(m: MediumParams, w: np.ndarray) -> np.ndarray:
    return 1.0 - m.omega_p ** 2 / _denominator(m, w)


def _index(m: MediumParams, w: np.ndarray) -> np.ndarray:
    n = np.sqrt(_permittivity(m, w).astype(complex))
    return np.where(n.imag < 0, -n, n)


def eval_permittivity(m: MediumParams, omega):
    """Complex permittivity 1 - wp^2 / (w^2 - w0^2 + i gamma w)"""
    w = _check_omega(omega)
    return _as_output(_permittivity(m, w), omega)


def d_omega_permittivity(m: MediumParams, omega):
    w = _check_omega(omega)
    d = _denominator(m, w)
    return _as_output(m.omega_p ** 2 * (2 * w + 1j * m.gamma) / d ** 2, omega)


def refractive_index(m: MediumParams, omega) -> ComplexIndex:
    """Principal square root of the permittivity, branch fixed so that n_i >= 0"""
    w = _check_omega(omega)
    n = _index(m, w)
    return ComplexIndex(n_r=_as_output(n.real, omega), n_i=_as_output(n.imag, omega))


def d_omega_index(m: MediumParams, omega):
    """Complex dn/dw = eps'/(2n)"""
    w = _check_omega(omega)
    n = _index(m, w)
    d = _denominator(m, w)
    eps_prime = m.omega_p ** 2 * (2 * w + 1j * m.gamma) / d ** 2
    return _as_output(eps_prime / (2 * n), omega)


def d_omega_n_r(m: MediumParams, omega):
    """Analytic derivative of the real refractive index"""
    return np.real(d_omega_index(m, omega))


def d_omega_omega_eps_r(m: MediumParams, omega):
    """d/dw [w eps_r(w)]"""
    w = _check_omega(omega)
    eps = _permittivity(m, w)
    d = _denominator(m, w)
    eps_prime = m.omega_p ** 2 * (2 * w + 1j * m.gamma) / d ** 2
    return _as_output(eps.real + w * eps_prime.real, omega)


def group_index(m: MediumParams, omega):
    """d/dw [w n_r(w)]; negative inside strong anomalous dispersion"""
    w = _check_omega(omega)
    n = _index(m, w)
    dn = np.real(d_omega_index(m, w))
    return _as_output(n.real + w * dn, omega)


def bose_occupation(omega, temperature: float):
    """Thermal occupation 1/(exp(w/T) - 1); identically zero at T = 0"""
    w = _check_omega(omega)
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}", field='temperature')
    if temperature == 0:
        return _as_output(np.zeros_like(w), omega)
    with np.errstate(over='ignore'):
        n = 1.0 / np.expm1(w / temperature)
    return _as_output(n, omega)


def longitudinal_frequency(m: MediumParams) -> float:
    return float(np.sqrt(m.omega0 ** 2 + m.omega_p ** 2))


def permittivity_table(m: MediumParams, grid) -> pd.DataFrame:
    """Tabulate eps and n on a frequency grid"""
    w = _check_omega(grid)
    eps = _permittivity(m, w)
    n = _index(m, w)
    df = pd.DataFrame({
        'omega': w,
        'eps_r': eps.real,
        'eps_i': eps.imag,
        'n_r': n.real,
        'n_i': n.imag,
    })
    logger.debug(f"Tabulated permittivity on {len(df)} points for {m}")
    return df


def branch_continuity(m: MediumParams, omega_min: float, omega_max: float, spacing: float = None) -> Dict[str, Any]:
    """Scan n(w) for jumps larger than the local derivative allows"""
    if spacing is None:
        spacing = m.gamma / 20
    count = int(np.ceil((omega_max - omega_min) / spacing)) + 1
    w = np.linspace(omega_min, omega_max, count)
    n = _index(m, _check_omega(w))
    dn = np.abs(d_omega_index(m, w))
    steps = np.abs(np.diff(n))
    bound = 2.0 * np.maximum(dn[:-1], dn[1:]) * np.diff(w) + 1e-14
    violations = int(np.sum(steps > bound))
    return {
        'points': count,
        'max_step_ratio': float(np.max(steps / bound)),
        'violations': violations,
        'min_n_r': float(n.real.min()),
        'min_n_i': float(n.imag.min()),
    }
