import pytest

_LINES: list[tuple[int, str]] = []


class Verdict:
    """Collects the checks of one acceptance criterion and prints one line."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks: list[tuple[str, bool]] = []

    def check(self, label: str, ok) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        detail = "; ".join(f"{label}{'' if ok else ' [x]'}" for label, ok in self.checks)
        return f"criterion {self.number:2d} {state}: {self.title} | {detail}"

    def finish(self):
        text = self.line()
        _LINES.append((self.number, text))
        print(text)
        failed = [label for label, ok in self.checks if not ok]
        assert not failed, f"criterion {self.number} failed: {failed}"


@pytest.fixture
def verdict():
    return Verdict


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, text in sorted(_LINES):
        terminalreporter.write_line(text)
