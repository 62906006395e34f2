import numpy as np
import pytest

from ifshmm.fixtures import m2_ar_family, m2_family, one_state_family, symmetric_family


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        return ok
    return record


@pytest.fixture
def m2():
    return m2_family().build()


@pytest.fixture
def m2_ar():
    return m2_ar_family().build()


@pytest.fixture
def one_state():
    return one_state_family().build()


@pytest.fixture
def symmetric():
    return symmetric_family(2).build()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
