import numpy as np
import pytest

from qmeasure import OscillatorBasis, project_gaussian

MASS = 0.5
OMEGA = 1.0
HBAR = 1.0
WIDTH = 5.0


@pytest.fixture(scope="session")
def basis():
    return OscillatorBasis(MASS, OMEGA, 64, HBAR)


@pytest.fixture(scope="session")
def period(basis):
    return basis.period


@pytest.fixture(scope="session")
def packet(basis):
    """Width-5 Gaussian projected onto the 64-level basis."""
    state, captured = project_gaussian(basis, WIDTH)
    assert captured > 0.999
    return state


@pytest.fixture()
def rng():
    return np.random.default_rng(20260821)
