import numpy as np
import pytest

from nvpolar import DriveConfig, SystemParams


@pytest.fixture(scope="session")
def tls_params():
    """Strong-driving system: omega_minus = 2pi*30 MHz, omega_plus = 2pi*5710 MHz."""
    return SystemParams.from_transitions(30.0, 5710.0)


@pytest.fixture(scope="session")
def ramsey_params():
    return SystemParams.from_mhz(2870.0, 2.8, 4.6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def resonant(p, omega_w, phi, **kw):
    return DriveConfig(omega_w=omega_w, carrier=p.omega_minus, phi=phi, **kw)
