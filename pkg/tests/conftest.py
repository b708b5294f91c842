import numpy as np
import pytest

from fbp import SolverConfig, make_initial_datum, solve_fbp, wave_datum


@pytest.fixture(scope="session")
def quartic():
    return make_initial_datum(1.0)


@pytest.fixture(scope="session")
def wave():
    return wave_datum(1.0)


@pytest.fixture(scope="session")
def wave_solution(wave):
    return solve_fbp(SolverConfig(b=1.0, T=0.25, M=256), wave)


@pytest.fixture(scope="session")
def quartic_solution(quartic):
    return solve_fbp(SolverConfig(b=1.0, T=0.25, M=256), quartic)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
