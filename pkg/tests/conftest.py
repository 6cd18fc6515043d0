import pytest
from hypothesis import settings

from cfpavp.params import default_parameters

settings.register_profile("pkg", max_examples=60, deadline=None)
settings.load_profile("pkg")

ACCEPTANCE = {}


@pytest.fixture
def params():
    return default_parameters()


@pytest.fixture
def record():
    """Store one acceptance line: record(key, passed, detail); passed=None marks a diagnostic."""

    def _record(key, passed, detail=""):
        ACCEPTANCE[key] = (None if passed is None else bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(str(k).split(".")[0]), str(k))):
        ok, detail = ACCEPTANCE[key]
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")
