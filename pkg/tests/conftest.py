import pytest

import _acceptance_report
from bhreduce.models import builtin_model


@pytest.fixture(scope="session")
def bin_lat():
    return builtin_model("bin-lat")


@pytest.fixture(scope="session")
def geo_exp():
    return builtin_model("geo-exp")


@pytest.fixture(scope="session")
def geo_det():
    return builtin_model("geo-det")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_report.LINES):
            terminalreporter.write_line(line)
