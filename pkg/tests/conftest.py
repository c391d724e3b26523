import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(capsys):
    """Record PASS/FAIL for one numbered criterion; prints the line as well."""

    class _Rec:
        def __call__(self, number, ok, detail):
            line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
            ACCEPTANCE_LINES.append(line)
            with capsys.disabled():
                print("\n" + line)
            assert ok, line

    return _Rec()
