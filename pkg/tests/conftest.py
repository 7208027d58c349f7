import pytest

_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance outcome for the end-of-session summary."""

    def rec(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return rec


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
