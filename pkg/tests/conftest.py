import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from magflow.sampling import random_point

settings.register_profile(
    "magflow", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("magflow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def n2_points():
    """Twenty seeded strictly hyperbolic N = 2 points."""
    r = np.random.default_rng(11)
    return [random_point(r, 2) for _ in range(20)]


# one line per acceptance criterion, repeated in the terminal summary
_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def record(request):
    """record(number, passed, detail): print and keep one verdict line."""
    def add(number: int, passed: bool, detail: str):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_LINES].append((number, line))
    return add


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
