import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line: report("A1", passed, "detail")."""
    def _report(cid, passed, detail):
        line = f"{cid} {'PASS' if passed else 'FAIL'}: {detail}"
        _LINES.append(line)
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
