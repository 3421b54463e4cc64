import functools

import pytest

from annealemu.model import LINEAR, t4_model
from annealemu.reference import evolve_exact

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def t4():
    return t4_model()


@functools.lru_cache(maxsize=None)
def reference(jt):
    return evolve_exact(t4_model(), LINEAR, jt)


@pytest.fixture(scope="session")
def ref():
    return reference


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
