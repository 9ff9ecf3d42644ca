import pytest

# criterion label -> summary line; filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record a criterion outcome and print its one-line summary."""

    def record(label, title: str, passed: bool, detail: str) -> None:
        line = f"criterion {str(label):>3} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_RESULTS[label] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(str(k).rstrip("abc")), str(k))):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
