import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracbl.spectral import Grid

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def grid256():
    return Grid(256)


@pytest.fixture
def grid1024():
    return Grid(1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
