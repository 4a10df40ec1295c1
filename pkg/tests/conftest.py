import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from warpfock.testfunctions import rapidity_grid

settings.register_profile(
    "warpfock",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("warpfock")

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Record one 'CRITERION k: PASS|FAIL ...' line for the terminal summary."""
    store = request.config.stash[ACCEPTANCE_KEY]

    def log(k, ok, detail):
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        store.append(line)

    return log


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid16():
    return rapidity_grid(1.0, 4.0, 16, 2)


@pytest.fixture(scope="session")
def grid8():
    return rapidity_grid(1.0, 2.0, 8, 2)
