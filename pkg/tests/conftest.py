"""
Fixtures compartidas de la suite de tests
"""

import numpy as np
import pytest

from modules.flux_noise import ConstantNoise, LinearNoise, make_flux
from modules.galerkin_solver import SolverConfig
from modules.spectral import TorusGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid1d():
    return TorusGrid(1, 32)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 16)


@pytest.fixture
def burgers():
    return make_flux("burgers1d")


@pytest.fixture
def zero_flux():
    return make_flux("burgers1d", profile="zero")


@pytest.fixture
def no_noise():
    return ConstantNoise(0.0)


@pytest.fixture
def linear_noise():
    return LinearNoise(0.2)


@pytest.fixture
def small_config():
    """Configuración 1D barata para tests de ensemble"""
    return SolverConfig(epsilon=0.05, delta=0.0025, n_per_axis=16, dt=0.01, T=0.1)
