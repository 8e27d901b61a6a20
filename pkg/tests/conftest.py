import pytest

from odgr import qlearn

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def _jit():
    qlearn.warmup()


@pytest.fixture(scope="session")
def table_cache() -> dict:
    """Trained tables shared across tests; training is deterministic in its key."""
    return {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
