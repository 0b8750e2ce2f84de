import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, ok, detail=""):
        ACCEPTANCE[number] = (ok, detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
