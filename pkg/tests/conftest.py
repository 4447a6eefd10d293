import numpy as np
import pytest

from spoofsim import trajectory as tr
from spoofsim.sensors import SensorParams


@pytest.fixture(scope="session")
def straight20():
    return tr.build_segment(tr.straight(5.0, 20.0, heading=0.0))


@pytest.fixture(scope="session")
def circle_traj():
    # 2 m/s on r = 10 m: |a| = 0.4, yaw rate 0.2
    return tr.build_segment(tr.arc(2.0, 10.0, duration=20.0, heading=0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def noiseless():
    return SensorParams.noiseless()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[0])):
            terminalreporter.write_line(line)
