import pytest

_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line, then assert."""

    def check(n, text, ok):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
        _LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
