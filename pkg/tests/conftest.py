import numpy as np
import pytest

from kinlab.basis import build_basis
from kinlab.collision import assemble_bgk, assemble_hard_sphere
from kinlab.grids import SpatialGrid


@pytest.fixture(scope="session")
def basis6():
    return build_basis(2, 6)


@pytest.fixture(scope="session")
def basis8():
    return build_basis(2, 8)


@pytest.fixture(scope="session")
def hs6(basis6):
    return assemble_hard_sphere(basis6)


@pytest.fixture(scope="session")
def hs8(basis8):
    return assemble_hard_sphere(basis8)


@pytest.fixture(scope="session")
def bgk6(basis6):
    return assemble_bgk(basis6, 1.0)


@pytest.fixture(scope="session")
def grid32():
    return SpatialGrid(d=2, n=32)


@pytest.fixture(scope="session")
def grid16():
    return SpatialGrid(d=2, n=16)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from conftest_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
