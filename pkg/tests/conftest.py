import pytest

from fockmel.specfun import DEFAULT_PRECISION, set_precision

ACCEPTANCE_LINES = {}


@pytest.fixture(autouse=True)
def default_precision():
    set_precision(DEFAULT_PRECISION)
    yield
    set_precision(DEFAULT_PRECISION)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
