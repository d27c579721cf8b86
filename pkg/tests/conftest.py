import math

import numpy as np
import pytest

from weilbohr.domain import LogBump
from weilbohr.zeta import find_zeros

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def zeros100():
    return find_zeros(100)


@pytest.fixture(scope="session")
def zeros150():
    return find_zeros(150)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def narrow_bump():
    # g with supp(g * g#) inside (1/2, 2)
    return LogBump(1.0, 0.3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_lattice(rng, base, k_lo=-4, k_hi=4, complex_values=True, label=None):
    from weilbohr.domain import PrimeLatticeFunction
    n = k_hi - k_lo + 1
    vals = rng.normal(size=n)
    if complex_values:
        vals = vals + 1j * rng.normal(size=n)
    return PrimeLatticeFunction(base, k_lo, vals, label)


LOG2 = math.log(2)
