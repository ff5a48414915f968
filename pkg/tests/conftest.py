import math

import numpy as np
import pytest

from dmnls.grid import SpatialGrid, gaussian_profile

# one PASS/FAIL line per acceptance criterion, echoed at the end of the run
_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid(256, 16.0 * math.pi)


@pytest.fixture(scope="session")
def big_grid():
    return SpatialGrid(512, 16.0 * math.pi)


@pytest.fixture
def gauss(grid):
    return gaussian_profile(grid, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """``acceptance(label, passed, detail)`` records and prints one summary line."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        request.config.stash[_ACCEPTANCE].append(line)
        print(line, flush=True)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
