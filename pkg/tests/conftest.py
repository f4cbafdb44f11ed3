import functools

import pytest

from astigmatic.core import ModelParams
from astigmatic.curves import build_curve

ACCEPTANCE_LINES: dict[int, str] = {}


@functools.lru_cache(maxsize=64)
def curve(rho, mu, d, component="inner", n=2000):
    """Built curves are reused across test modules; treat them as read-only."""
    return build_curve(ModelParams(rho, mu, d), component=component, n=n)


@pytest.fixture
def cached_curve():
    return curve


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
