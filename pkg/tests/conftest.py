import functools

import pytest

from hubkit.crossover import crossover_dimension


@functools.lru_cache(maxsize=None)
def _solve(n, k):
    return crossover_dimension(n, k)


@pytest.fixture(scope="session")
def d_star():
    """Cached crossover solves, shared across test modules."""
    return _solve


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
