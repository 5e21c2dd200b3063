import re

import numpy as np
import pytest

from poissonproj.estimator import Quadrature
from poissonproj.sampler import test_intensity as paper_intensity

ACCEPTANCE_LINES = []


@pytest.fixture
def paper():
    return paper_intensity()


@pytest.fixture
def quad():
    return Quadrature()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(re.search(r"\] C(\d+)", l).group(1))):
            terminalreporter.write_line(line)
