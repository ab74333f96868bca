import pytest

_VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def verdict():
    """Record one PASS/FAIL line per acceptance check and return the outcome."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
