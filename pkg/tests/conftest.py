from __future__ import annotations

import pytest
from hypothesis import settings

from jumpstop import SolverGrid

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def small_grid():
    return SolverGrid.uniform(1.0, 200, -2.0, 2.0, 40)


def pytest_terminal_summary(terminalreporter):
    from helpers import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
