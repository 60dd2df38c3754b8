import math

import pytest

from risrecip.channel import SPEED_OF_LIGHT
from risrecip.models import IdealVaractor, build_panel
from risrecip.nonreciprocal import phase_gradient_schedule

F1 = 10e9
FM = 0.05 * F1
BETA = 0.2 * 2 * math.pi * F1 / SPEED_OF_LIGHT


def demo_panel(cols=64, f=F1):
    lam = SPEED_OF_LIGHT / f
    return build_panel(1, cols, lam / 4, lam / 4, 1, IdealVaractor())


def demo_schedule(panel, reverse=False):
    return phase_gradient_schedule(panel, 1.0 / FM, BETA, reverse=reverse)


# -- acceptance summary ------------------------------------------------------------

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion id")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.failed):
        _RESULTS[label] = ("PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS):
        status, dur = _RESULTS[label]
        terminalreporter.write_line(f"{status} {label} ({dur:.2f} s)")
