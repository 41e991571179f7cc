import numpy as np
import pytest

from skyrmion_optics import GridSpec, build_beam, project_intensities
from skyrmion_optics.polarimetry import PoincareField


def hedgehog(grid, m, theta, phase=0.0):
    """Closed-form texture M = (sin T cos(m phi + c), sin T sin(m phi + c), cos T)."""
    x, y = grid.coords()
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    t = theta(r)
    return PoincareField(
        grid,
        np.sin(t) * np.cos(m * phi + phase),
        np.sin(t) * np.sin(m * phi + phase),
        np.cos(t),
        np.ones(grid.shape, bool),
    )


def count_sign_changes(values, cyclic=False):
    s = np.sign(values)
    s = s[s != 0]
    if cyclic:
        s = np.append(s, s[0])
    return int(np.sum(s[1:] != s[:-1]))


@pytest.fixture(scope="session")
def beam_d2():
    return build_beam(0, 2, 0.0)


@pytest.fixture(scope="session")
def ms_d2(beam_d2):
    return project_intensities(beam_d2)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec.square(64, 4.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
