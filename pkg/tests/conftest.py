import pytest

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda s: int(s[2:])):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:<5} {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        print(f"{key} {'PASS' if passed else 'FAIL'}  {detail}")
        return bool(passed)
    return _record
