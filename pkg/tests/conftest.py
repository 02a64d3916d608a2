import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sigmag.core import make_grid  # noqa: E402


@pytest.fixture
def grid():
    return make_grid(1.0, 400)


@pytest.fixture
def fine_grid():
    return make_grid(1.0, 1000)


# pass/fail lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
