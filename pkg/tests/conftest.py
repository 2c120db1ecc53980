import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> list of (check, ok, detail)
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, check, ok, detail=""):
        ACCEPTANCE.setdefault(number, []).append((check, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        ok = all(c[1] for c in checks)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}")
        for check, good, detail in checks:
            tr.write_line(f"    [{'pass' if good else 'FAIL'}] {check}" + (f": {detail}" if detail else ""))
