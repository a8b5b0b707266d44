import math

import numpy as np
import pytest

from fraktal import IfsSpec, build_prefractal

LOG2_LOG3 = math.log(2) / math.log(3)


@pytest.fixture(scope="session")
def cantor4():
    return build_prefractal(IfsSpec.cantor(), 4)


@pytest.fixture(scope="session")
def cantor1():
    return build_prefractal(IfsSpec.cantor(), 1)


@pytest.fixture
def grid1001():
    return np.linspace(0.0, 1.0, 1001)


# PASS/FAIL lines from the acceptance module, echoed after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
