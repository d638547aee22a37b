import math

import pytest

from delaylight.model import MediumParams

GAMMA = 1.0 / 3e-3
GAMMA_1P = 2 * math.pi * 300e6


@pytest.fixture
def medium():
    return MediumParams(d=2.5, gamma_1p=GAMMA_1P, gamma=GAMMA, eta_act=1.0, diffusion=1050.0)


@pytest.fixture
def weak_medium():
    return MediumParams(d=0.01, gamma_1p=GAMMA_1P, gamma=GAMMA, eta_act=1.0, diffusion=1050.0)


# one line per acceptance check, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
