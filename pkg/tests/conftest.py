import numpy as np
import pytest

from eqpyragas.floquet import twisted_monodromy
from eqpyragas.flow import find_discrete_wave
from eqpyragas.systems import get_system

# closed-form twisted multipliers of the builtin oscillator (a = 0.5, theta = pi)
OSC_MULTIPLIERS = np.array([-np.exp(np.pi / 2), 1.0, np.exp(-2 * np.pi)])


def _wave(name, **params):
    s = get_system(name, **params)
    return find_discrete_wave(s.field, s.h, s.theta_guess, s.x_guess, n=s.n, m=s.m)


@pytest.fixture(scope="session")
def osc_wave():
    return _wave("twisted_oscillator")


@pytest.fixture(scope="session")
def osc_tm(osc_wave):
    return twisted_monodromy(osc_wave)


@pytest.fixture(scope="session")
def lorenz_wave():
    return _wave("lorenz")


@pytest.fixture(scope="session")
def lorenz_tm(lorenz_wave):
    return twisted_monodromy(lorenz_wave)


@pytest.fixture(scope="session")
def pos_wave():
    return _wave("positive_unstable")


@pytest.fixture(scope="session")
def stable_wave():
    return _wave("stable_oscillator")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = []
    request.config._acceptance_lines = lines
    return lines


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
