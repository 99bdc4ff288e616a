import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from jitcluster.gates import get_procedure


@pytest.fixture
def dh():
    return get_procedure("dh")


@pytest.fixture
def bc():
    return get_procedure("bc")


_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed live and again in the terminal summary."""
    lines = request.config.stash[_LINES]

    def record(number, ok, detail, elapsed=None, limit=None):
        timing = ""
        if elapsed is not None:
            timing = f" [{elapsed:.2f} s" + (f" / limit {limit:g} s]" if limit else "]")
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}{timing}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
