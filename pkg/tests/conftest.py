import os

import pytest
from hypothesis import HealthCheck, settings

from cstarweb.complex_map import MapParams

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def lam32():
    return MapParams(32.0)


@pytest.fixture(scope="session")
def lam2():
    return MapParams(2.0)


# -- acceptance summary ----------------------------------------------------------

_criteria = {}


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    k, title = marker
    if report.when == "call" or report.failed or report.skipped:
        prev = _criteria.get(k, (title, "PASS"))[1]
        outcome = "FAIL" if report.failed else "SKIP" if report.skipped else "PASS"
        _criteria[k] = (title, "FAIL" if "FAIL" in (prev, outcome) else outcome)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        title, outcome = _criteria[k]
        terminalreporter.write_line(f"criterion {k:2d} {outcome}: {title}")
