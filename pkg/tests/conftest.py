import numpy as np
import pytest

from weakcollapse.quantum import ket


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def p0():
    return np.outer(ket(0, 2), ket(0, 2))


@pytest.fixture
def plus():
    return np.full((2, 2), 0.5, dtype=complex)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; returns ``passed`` so tests can assert on it."""
    lines = request.config.stash[ACCEPTANCE]

    def report(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
