import os
import sys

import pytest

# oracles.py sits next to the tests
sys.path.insert(0, os.path.dirname(__file__))

_LINES = []


@pytest.fixture
def criterion_line():
    """Record one summary line per acceptance criterion; printed at the end of the run."""
    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
