import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""
    def add(criterion, ok, detail):
        # ok=None marks a criterion that could not run
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        _LINES.append(f"[{status}] criterion {criterion}: {detail}")
        print(_LINES[-1])
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
