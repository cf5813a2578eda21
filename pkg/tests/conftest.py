import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; call as ``criterion(n, passed, detail)`` before asserting."""
    def record(n: int, passed: bool, detail: str) -> None:
        _CRITERIA[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        passed, detail = _CRITERIA[n]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {n:>2}: {detail}")
