import warnings

import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

# criterion id -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        print(f"[{key}] {'PASS' if passed else 'FAIL'}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        head = key.split()[0]
        return (0, int(head)) if head.isdigit() else (1, key)

    for key in sorted(ACCEPTANCE, key=order):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<22} {'PASS' if passed else 'FAIL'}  {detail}")
