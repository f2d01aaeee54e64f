import numpy as np
import pytest

from obstacle_control import assemble, build_grid


@pytest.fixture(scope="session")
def grid1d():
    return build_grid(1, 65, "left")


@pytest.fixture(scope="session")
def grid2d():
    return build_grid(2, 17, "left")


@pytest.fixture(scope="session")
def linear1d(grid1d):
    """-u'' = 2, u(0) = 1, u'(1) = 0: no contact anywhere."""
    return assemble(grid1d, g=2.0, b=1.0)


@pytest.fixture(scope="session")
def contact1d(grid1d):
    x = grid1d.x
    g = np.where(x > 0.5, -50.0, 10.0)
    return assemble(grid1d, g=g, b=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mods = [m for name, m in sys.modules.items() if name.endswith("test_acceptance")]
    lines = sorted(getattr(mods[0], "LINES", [])) if mods else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
