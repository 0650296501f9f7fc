import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}" + (f" :: {detail}" if detail else "")
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
