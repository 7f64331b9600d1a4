"""Shared pytest plumbing for the oscavg test suite."""
import pytest

# One line per acceptance criterion, printed after the run so the verdicts are
# visible even when pytest captures per-test stdout.
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
