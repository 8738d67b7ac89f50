import math

import numpy as np
import pytest

from services.dielectric_fields import (
    SpectralDensity, electric_closed_form, electric_spectral_density, k_integral, k_squared_integral,
    magnetic_closed_form, magnetic_spectral_density, noise_correlator, regularized_propagator_trace,
    spectral_density, thermal_electric_spectral_density, xp_commutator,
)
from services.medium_models import MediumParams, bose_occupation, eval_permittivity, refractive_index
from utils.errors import DivergenceError, DomainError, UnsupportedRegimeError

LOG_GRID = np.geomspace(0.1, 10.0, 20)


@pytest.mark.parametrize("omega", LOG_GRID)
def test_k_integral_closed_form(medium, omega):
    radial = k_integral(medium, omega)
    n_i = refractive_index(medium, omega).n_i
    assert radial.closed_form == pytest.approx(math.pi ** 2 / (omega * n_i), rel=1e-14)
    assert radial.relative_deviation <= 1e-8


@pytest.mark.parametrize("omega", [0.1, 0.5, 2.0, 7.85, 10.0])
def test_k_integral_narrow_pole_in_low_loss_medium(omega):
    m = MediumParams(omega0=1.0, omega_p=0.5, gamma=0.01)
    radial = k_integral(m, omega)
    assert radial.quadrature > 0
    assert radial.relative_deviation <= 1e-8


def test_k_integral_grows_like_inverse_loss():
    omega = 2.0
    n_i, values = [], []
    for gamma in (1e-1, 1e-2, 1e-3):
        m = MediumParams(omega0=1.0, omega_p=0.5, gamma=gamma)
        radial = k_integral(m, omega)
        assert radial.relative_deviation <= 1e-8
        n_i.append(refractive_index(m, omega).n_i)
        values.append(radial.quadrature)
    slope = np.polyfit(np.log(n_i), np.log(values), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.02)


@pytest.mark.parametrize("scale", [0.5, 3.0, 20.0])
def test_k_integral_scales_inversely_with_frequency(medium, scale):
    # scaling every frequency of the medium keeps eps fixed at the scaled frequency
    scaled = MediumParams(omega0=scale * medium.omega0, omega_p=scale * medium.omega_p, gamma=scale * medium.gamma)
    base = k_integral(medium, 1.3).quadrature
    assert k_integral(scaled, 1.3 * scale).quadrature == pytest.approx(base / scale, rel=1e-8)


@pytest.mark.parametrize("omega", LOG_GRID)
def test_electric_spectral_density(medium, omega):
    point = electric_spectral_density(medium, omega)
    assert point.closed_form == pytest.approx(omega ** 3 * refractive_index(medium, omega).n_r / math.pi)
    assert point.relative_deviation <= 1e-8


@pytest.mark.parametrize("omega_p", [1e-1, 1e-2, 1e-3])
def test_spectra_approach_vacuum_as_coupling_vanishes(omega_p):
    m = MediumParams(omega0=1.0, omega_p=omega_p, gamma=0.1)
    omega = 2.0
    free = omega ** 3 / math.pi
    electric = electric_spectral_density(m, omega)
    magnetic = magnetic_spectral_density(m, omega)
    assert electric.relative_deviation <= 1e-8
    assert magnetic.relative_deviation <= 1e-8
    # eps_I -> 0 while the k-integral grows like 1/n_I
    assert abs(electric.quadrature / free - 1) <= omega_p ** 2
    assert abs(magnetic.quadrature / free - 1) <= omega_p ** 2


def test_electric_density_limit_along_loss_family():
    deviations = []
    for gamma in (1e-1, 1e-2, 1e-3):
        point = electric_spectral_density(MediumParams(omega0=1.0, omega_p=1e-2, gamma=gamma), 3.0)
        assert point.relative_deviation <= 1e-8
        deviations.append(abs(point.quadrature / (27.0 / math.pi) - 1))
    assert max(deviations) <= 1e-4


@pytest.mark.parametrize("omega", [0.2, 0.9, 1.0, 1.1, 3.0])
def test_magnetic_spectral_density_weak_medium(weak_medium, omega):
    point = magnetic_spectral_density(weak_medium, omega)
    assert point.closed_form > 0
    assert point.relative_deviation <= 1e-8


def test_k_squared_integral_regularized_closed_form(medium):
    radial = k_squared_integral(medium, 2.0)
    s = complex(refractive_index(medium, 2.0).value) * 2.0
    assert radial.closed_form == pytest.approx(math.pi ** 2 * (s ** 3).real / (s.real * s.imag), rel=1e-12)
    assert radial.relative_deviation <= 1e-8


def test_magnetic_density_changes_sign_near_resonance(medium):
    values = magnetic_closed_form(medium, np.linspace(0.9, 1.3, 200))
    assert values.min() < 0 < values.max()


def test_lossless_k_integral_diverges(vacuum):
    with pytest.raises(DivergenceError):
        k_integral(vacuum, 1.0)


def test_vacuum_spectra_coincide(vacuum):
    w = np.geomspace(0.1, 10, 30)
    np.testing.assert_allclose(electric_closed_form(vacuum, w), w ** 3 / math.pi, rtol=1e-15)
    np.testing.assert_allclose(magnetic_closed_form(vacuum, w), w ** 3 / math.pi, rtol=1e-15)


def test_noise_correlator_at_resonance(medium):
    anti = noise_correlator(medium, 1.0, 'antinormal', temperature=0.0)
    normal = noise_correlator(medium, 1.0, 'normal', temperature=0.0)
    assert anti.amplitude == pytest.approx(10.0, rel=1e-14)
    assert normal.amplitude == 0.0
    assert anti.commutator == pytest.approx(10.0, rel=1e-14)


def test_fluctuation_dissipation_grid(medium):
    for omega in np.linspace(0.1, 5.0, 10):
        eps_i = float(np.imag(eval_permittivity(medium, omega)))
        for temperature in np.linspace(0.0, 2.0, 5):
            normal = noise_correlator(medium, omega, 'normal', temperature).amplitude
            anti = noise_correlator(medium, omega, 'antinormal', temperature).amplitude
            n_bar = float(bose_occupation(omega, temperature))
            scale = 4 * eps_i * (n_bar + 1)
            assert abs(anti - normal - 4 * eps_i) <= 1e-12 * scale
            assert abs(normal - 4 * eps_i * n_bar) <= 1e-12 * scale


def test_noise_correlator_rejects_unknown_ordering(medium):
    with pytest.raises(DomainError):
        noise_correlator(medium, 1.0, 'symmetric')


def test_thermal_electric_density_orderings(medium):
    w = np.geomspace(0.1, 10, 25)
    normal = thermal_electric_spectral_density(medium, w, 'normal', 1.0)
    anti = thermal_electric_spectral_density(medium, w, 'antinormal', 1.0)
    np.testing.assert_allclose(anti - normal, electric_closed_form(medium, w), rtol=1e-12)
    assert np.all(thermal_electric_spectral_density(medium, w, 'normal', 0.0) == 0.0)


@pytest.mark.parametrize("omega", [0.3, 1.0, 1.2, 4.0, 7.85, 10.0])
def test_regularized_propagator_trace(medium, omega):
    trace = regularized_propagator_trace(medium, omega)
    n = complex(refractive_index(medium, omega).value)
    assert trace.g_closed == pytest.approx(2j * math.pi ** 2 * n * omega)
    assert abs(trace.g_quadrature - trace.g_closed) <= 1e-8 * abs(trace.g_closed)
    assert abs(trace.dg_quadrature - trace.dg_closed) <= 1e-8 * abs(trace.dg_closed)


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_canonical_commutator_preserved(gamma):
    m = MediumParams(omega0=1.0, omega_p=0.5, gamma=gamma)
    result = xp_commutator(m, 0.0)
    assert result.closed_form_value == 1.0
    assert result.quadrature_value == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("tau", [0.5, 3.0, 17.0, 60.0, 100.0])
def test_commutator_in_time(medium, tau):
    assert xp_commutator(medium, tau).deviation <= 1e-6


def test_commutator_after_one_period(medium):
    omega1 = math.sqrt(1 - 0.1 ** 2 / 4)
    result = xp_commutator(medium, 2 * math.pi / omega1)
    assert result.closed_form_value == pytest.approx(math.exp(-math.pi * 0.1 / omega1), rel=1e-12)
    assert result.deviation <= 1e-6


def test_overdamped_commutator_unsupported():
    with pytest.raises(UnsupportedRegimeError):
        xp_commutator(MediumParams(gamma=2.5), 0.0)


def test_spectral_density_table(medium):
    grid = np.geomspace(0.1, 10, 40)
    density = spectral_density(medium, grid, 'electric', check_quadrature=True)
    assert density.metadata['max_quadrature_deviation'] <= 1e-8
    frame = density.to_frame()
    assert list(frame.columns) == ['omega', 'value', 'kind']
    assert len(frame) == 40
    w = np.linspace(0.5, 2.0, 2001)
    fine = spectral_density(medium, w, 'electric')
    assert fine.integrate() == pytest.approx(np.sum(np.diff(w) * 0.5 * (fine.values[1:] + fine.values[:-1])))


def test_noise_spectral_density_is_non_negative(medium):
    density = spectral_density(medium, np.geomspace(0.1, 10, 20), 'noise-K')
    assert np.all(density.values > 0)


def test_spectral_density_validation():
    with pytest.raises(DomainError):
        SpectralDensity(grid=np.array([1.0, 2.0]), values=np.array([1.0, -1.0]), kind='electric')
    with pytest.raises(DomainError):
        SpectralDensity(grid=np.array([2.0, 1.0]), values=np.array([1.0, 1.0]), kind='magnetic')
    with pytest.raises(DomainError):
        SpectralDensity(grid=np.array([1.0]), values=np.array([1.0]), kind='scalar')
    # magnetic densities may be negative
    SpectralDensity(grid=np.array([1.0, 2.0]), values=np.array([1.0, -1.0]), kind='magnetic')
