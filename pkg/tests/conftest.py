import math

import pytest

from qkdblind.config import preset


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


@pytest.fixture
def small():
    """Preset loader at a gate count cheap enough for the reference engine."""

    def make(name, gates=2000, **run):
        return preset(name, gates=gates, **run)

    return make


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(label, passed, detail)``."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(label, passed, detail=""):
        lines.append((label, bool(passed), detail))
        assert passed, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in lines:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
