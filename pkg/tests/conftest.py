import numpy as np
import pytest

from distlayer._kernels import backends
from distlayer.gaussian import Gaussian


@pytest.fixture(params=sorted(backends()))
def kernels(request):
    return backends()[request.param]


@pytest.fixture
def corr2():
    """N(0, [[2,1],[1,2]]): eigenpairs (3, (1,1)/sqrt2) and (1, (1,-1)/sqrt2)."""
    return Gaussian([0.0, 0.0], [[2.0, 1.0], [1.0, 2.0]])


@pytest.fixture
def diag49():
    return Gaussian([1.0, 1.0], np.diag([4.0, 9.0]))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns a callable
    ``(number, title, value, tolerance, passed)`` that also prints it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, value, tolerance, passed, op="<"):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {title}  value={value:.3e} {op} {tolerance:.0e}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda t: t[0]):
            terminalreporter.write_line(line)
