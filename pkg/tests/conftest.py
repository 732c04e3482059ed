import math

import numpy as np
import pytest

from geomech import calc, geometry, hamiltonian as ham, lagrangian as lag
from geomech import scenarios


@pytest.fixture(scope="session")
def pendulum():
    """Pendulum with m = l = 1, g = 9.8 built from plain callables (automatic derivatives)."""
    def U(x):
        return 9.8 * (1.0 - np.cos(x[0]))

    L = lag.natural_lagrangian(geometry.constant([[1.0]]), U, 1.0, name="pendulum")
    H = ham.separable_hamiltonian(lambda p: 0.5 * p[0] * p[0], U, 1, name="pendulum*")
    return L, H


@pytest.fixture(scope="session")
def kepler():
    """Kepler problem with m = k = 1 and analytic potential rules."""
    U = scenarios.kepler_potential(1.0)
    g = geometry.euclidean(3)
    return lag.natural_lagrangian(g, U, 1.0, name="kepler"), ham.natural_hamiltonian(g, U, 1.0, name="kepler*")


@pytest.fixture(scope="session")
def kepler_plain():
    """Kepler problem whose potential is differentiated automatically."""
    def U(x):
        return -1.0 / np.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])

    g = geometry.euclidean(3)
    return lag.natural_lagrangian(g, U, 1.0), ham.natural_hamiltonian(g, U, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def kepler_samples(rng, count):
    """Phase or tangent samples away from the origin."""
    r = rng.uniform(0.5, 2.0, count)
    d = rng.normal(size=(count, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return np.hstack([r[:, None] * d, rng.uniform(-1.0, 1.0, (count, 3))])


KEPLER_PERIOD = scenarios.kepler_period()
assert math.isclose(KEPLER_PERIOD, 2 * math.pi * 2.5 ** 1.5)


ACCEPTANCE = {}


def report_criterion(number, title, passed, detail):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
