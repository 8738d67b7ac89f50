import pytest

from services.medium_models import MediumParams
from services.oscillator_reservoir import OscillatorModel
from services.quadrature import QuadSpec


@pytest.fixture
def medium() -> MediumParams:
    """Default Lorentz medium (w0=1, wp=0.5, gamma=0.1)"""
    return MediumParams()


@pytest.fixture
def weak_medium() -> MediumParams:
    """Weakly absorbing medium where S_H stays positive"""
    return MediumParams(omega0=1.0, omega_p=0.1, gamma=0.1)


@pytest.fixture
def vacuum() -> MediumParams:
    return MediumParams(omega0=1.0, omega_p=0.0, gamma=0.1)


@pytest.fixture
def oscillator() -> OscillatorModel:
    """w0/gamma = 100 with the default cut-off"""
    return OscillatorModel(omega0=1.0, gamma=0.01)


@pytest.fixture
def strict_quad() -> QuadSpec:
    return QuadSpec(rel_tol=1e-11, abs_tol=1e-15, max_subdivisions=4000)


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "out"
    return str(path)
