import numpy as np
import pytest

from fracgs.nonlinearity import power_spec
from fracgs.spectral import Field, make_grid


def sech_profile(x, mu=1.0, c=1.0):
    """Closed-form 1D cubic ground state: A sech(B x) with A^2 = mu c^2 / 2, B = mu c."""
    A = np.sqrt(mu * c * c / 2)
    B = mu * c
    z = np.exp(-np.abs(B * x))
    return A * 2 * z / (1 + z * z)


def contract2(f: Field) -> Field:
    """Lattice dilation by 2: sqrt(2) f(2x), reading f at the even nodes."""
    n = f.grid.points
    v = np.zeros(n)
    v[n // 4: 3 * n // 4] = f.values[::2]
    return Field(f.grid, np.sqrt(2.0) * v)


def random_bumps(grid, rng, k=3):
    x = grid.axis
    v = np.zeros(grid.points)
    for _ in range(k):
        c, w, a = rng.uniform(-grid.box / 16, grid.box / 16), rng.uniform(0.5, 1.0), rng.uniform(0.2, 2.0)
        v += a * np.exp(-((x - c) ** 2) / (2 * w * w))
    return Field(grid, v)


@pytest.fixture(scope="session")
def grid1d():
    return make_grid(1, 40.0, 512)


@pytest.fixture(scope="session")
def cubic():
    return power_spec(1, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
