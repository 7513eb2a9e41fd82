import pytest

_ACCEPTANCE_LINES: list[str] = []


class AcceptanceReport:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self, sink):
        self.sink = sink

    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        self.sink(line)
        return ok

    def skip(self, number: int, title: str, reason: str):
        self.sink(f"[SKIP] criterion {number}: {title} ({reason})")
        pytest.skip(reason)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceReport(_ACCEPTANCE_LINES.append)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
