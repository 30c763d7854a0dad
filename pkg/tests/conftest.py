import math

import numpy as np
import pytest

from anosovlab.matrix_core import build_mixmax, cat_map
from anosovlab.spectrum import eigenvalues_numeric

CAT_L1 = (3 + math.sqrt(5)) / 2
CAT_H = math.log(CAT_L1)


@pytest.fixture(scope="session")
def cat_spec():
    return eigenvalues_numeric(cat_map())


@pytest.fixture(scope="session")
def mixmax256_spec():
    return eigenvalues_numeric(build_mixmax(256, -1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
