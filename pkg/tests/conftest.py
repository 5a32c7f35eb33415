from pathlib import Path

import numpy as np
import pytest

from tokcomp import kernels

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    # JIT compilation is a one-off cost; keep it out of the timed tests
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        crit = getattr(report, "_criterion", None)
        if crit is not None:
            prev = _CRITERIA.get(crit, "PASS")
            _CRITERIA[crit] = "PASS" if report.passed and prev == "PASS" else "FAIL"



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title}")
