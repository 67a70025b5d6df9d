import pytest

# (criterion, passed, detail) lines filled in by test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    def record(label, passed, detail):
        ACCEPTANCE.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
