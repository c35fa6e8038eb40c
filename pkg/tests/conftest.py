import numpy as np
import pytest

from confsphere.mesh import Triangulation

TET = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]


def icosahedron_faces():
    from confsphere.surfaces import icosphere

    return icosphere(0)[0].faces


def hex_fan():
    """Six unit equilateral triangles around hub 0 (counter-clockwise)."""
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    pos = np.array([0j] + [np.exp(1j * np.pi * k / 3) for k in range(6)])
    return Triangulation(faces), pos


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
