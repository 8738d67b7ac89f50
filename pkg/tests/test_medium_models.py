import math

import numpy as np
import pytest

from services.medium_models import (
    MediumParams, bose_occupation, branch_continuity, d_omega_index, d_omega_n_r, d_omega_omega_eps_r,
    d_omega_permittivity, eval_permittivity, group_index, longitudinal_frequency, permittivity_table,
    refractive_index,
)
from utils.errors import DomainError


def test_permittivity_at_resonance(medium):
    # w = w0: eps = 1 - wp^2/(i gamma w0) = 1 + 2.5 i
    eps = eval_permittivity(medium, 1.0)
    assert eps.real == pytest.approx(1.0, abs=1e-14)
    assert eps.imag == pytest.approx(2.5, rel=1e-14)


def test_permittivity_static_limit(medium):
    eps = eval_permittivity(medium, 1e-6)
    assert eps.real == pytest.approx(1.25, rel=1e-9)
    assert 0 < eps.imag < 1e-6


def test_vacuum_is_unity(vacuum):
    w = np.geomspace(0.01, 100, 50)
    assert np.all(eval_permittivity(vacuum, w) == 1.0)
    n = refractive_index(vacuum, w)
    assert np.all(n.n_r == 1.0)
    assert np.all(n.n_i == 0.0)


def test_refractive_index_branch(medium):
    w = np.geomspace(0.01, 100, 400)
    n = refractive_index(medium, w)
    assert np.all(n.n_i >= 0)
    assert np.all(n.n_r > 0)
    np.testing.assert_allclose(n.permittivity, eval_permittivity(medium, w), rtol=1e-13)
    np.testing.assert_allclose(n.eps_i, np.imag(eval_permittivity(medium, w)), rtol=1e-12)


def test_index_at_resonance(medium):
    n = refractive_index(medium, 1.0)
    expected = np.sqrt(1 + 2.5j)
    assert n.n_r == pytest.approx(expected.real, rel=1e-14)
    assert n.n_i == pytest.approx(expected.imag, rel=1e-14)


@pytest.mark.parametrize("omega", [0.3, 0.97, 1.0, 1.05, 1.2, 3.0])
def test_analytic_derivatives_match_finite_differences(medium, omega):
    h = 1e-6
    fd_eps = (eval_permittivity(medium, omega + h) - eval_permittivity(medium, omega - h)) / (2 * h)
    assert abs(d_omega_permittivity(medium, omega) - fd_eps) <= 1e-6 * abs(fd_eps)

    fd_n = (refractive_index(medium, omega + h).value - refractive_index(medium, omega - h).value) / (2 * h)
    assert abs(d_omega_index(medium, omega) - fd_n) <= 1e-6 * abs(fd_n)
    assert d_omega_n_r(medium, omega) == pytest.approx(fd_n.real, rel=1e-5, abs=1e-9)

    def w_eps_r(w):
        return w * eval_permittivity(medium, w).real

    fd = (w_eps_r(omega + h) - w_eps_r(omega - h)) / (2 * h)
    assert d_omega_omega_eps_r(medium, omega) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_group_index_negative_in_anomalous_band(medium):
    assert group_index(medium, 1.0) < 0
    assert group_index(medium, 0.2) > 1
    assert group_index(medium, 20.0) == pytest.approx(1.0, abs=1e-3)


def test_longitudinal_frequency(medium):
    assert longitudinal_frequency(medium) == pytest.approx(math.sqrt(1.25))


def test_bose_occupation():
    assert bose_occupation(1.0, 1.0) == pytest.approx(1 / (math.e - 1), rel=1e-14)
    assert bose_occupation(1.0, 0.0) == 0.0
    np.testing.assert_array_equal(bose_occupation(np.array([0.5, 2.0]), 0.0), [0.0, 0.0])
    # far past overflow of exp the occupation is exactly zero
    assert bose_occupation(1000.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        bose_occupation(1.0, -1.0)


@pytest.mark.parametrize("field,value", [
    ('omega0', 0.0), ('omega_p', -0.1), ('gamma', 0.0), ('gamma', -1.0), ('temperature', -1.0),
    ('omega0', float('nan')),
])
def test_invalid_parameters_name_their_field(field, value):
    with pytest.raises(DomainError) as info:
        MediumParams(**{field: value})
    assert info.value.field == field


@pytest.mark.parametrize("omega", [0.0, -1.0, float('inf')])
def test_invalid_frequency(medium, omega):
    with pytest.raises(DomainError):
        eval_permittivity(medium, omega)


def test_from_cfg_accepts_strings():
    m = MediumParams.from_cfg({'omega_p': '1', 'gamma': '0.5'})
    assert m == MediumParams(omega0=1.0, omega_p=1.0, gamma=0.5)


def test_permittivity_table_columns(medium):
    df = permittivity_table(medium, np.geomspace(0.01, 100, 400))
    assert list(df.columns) == ['omega', 'eps_r', 'eps_i', 'n_r', 'n_i']
    assert len(df) == 400
    assert (df['eps_i'] > 0).all()


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
def test_branch_continuity(gamma):
    m = MediumParams(omega_p=1.0, gamma=gamma)
    scan = branch_continuity(m, 0.01, 10.0)
    assert scan['violations'] == 0
    assert scan['min_n_i'] >= 0
