import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

GATE = {}


@pytest.fixture
def gate():
    """Record one acceptance verdict: gate(k, name, ok, detail)."""

    def record(k, name, ok, detail=""):
        GATE[k] = (name, bool(ok), detail)
        print(f"CRITERION {k:2d} {name}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(GATE):
        name, ok, detail = GATE[k]
        terminalreporter.write_line(f"CRITERION {k:2d} {name}: {'PASS' if ok else 'FAIL'}  {detail}")
