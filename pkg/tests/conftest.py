import pytest

_CRITERIA: list[str] = []


class Criterion:
    """Collects named checks for one acceptance item and reports a single line."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.failures: list[str] = []
        self.notes: list[str] = []

    def check(self, ok: bool, what: str) -> None:
        (self.notes if ok else self.failures).append(what)

    def finish(self) -> None:
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures) if self.failures else "; ".join(self.notes)
        line = f"[{status}] criterion {self.number}: {self.title} | {detail}"
        _CRITERIA.append(line)
        print(line)
        assert not self.failures, line


@pytest.fixture
def criterion():
    def make(number: int, title: str) -> Criterion:
        return Criterion(number, title)

    return make


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
