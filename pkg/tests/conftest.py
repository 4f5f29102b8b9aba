import pytest

ACCEPTANCE_LINES = []


def report_criterion(label, passed, detail):
    """Record and print one acceptance line."""
    line = f"ACCEPTANCE {label:<4s} {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture
def report():
    return report_criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
