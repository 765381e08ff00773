import pytest

_REPORT: list[str] = []


@pytest.fixture
def report():
    """Record a one-line PASS/FAIL verdict; also echoed in the terminal summary."""

    def emit(line: str) -> None:
        print(line)
        _REPORT.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)
