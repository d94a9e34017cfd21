import numpy as np
import pytest

from holoqudit.device import DeviceParams
from holoqudit.dynamics import TimeGrid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def paper_device():
    return DeviceParams.preset("paper-sim")


@pytest.fixture(scope="session")
def default_grid():
    return TimeGrid(30.0, 3000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
