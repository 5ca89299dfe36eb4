import numpy as np
import pytest

from selbias import build_empirical_quantile


@pytest.fixture
def two_point():
    return build_empirical_quantile([(10, 1), (20, 1)])


@pytest.fixture
def three_point():
    return build_empirical_quantile([(5, 1), (15, 1), (25, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def random_quantile(rng, max_n=40):
    n = int(rng.integers(1, max_n))
    scores = rng.normal(500, 100, n).round(1)
    weights = rng.uniform(0.1, 3.0, n)
    return build_empirical_quantile(scores, weights)


# acceptance reporting: one PASS/FAIL line per criterion at the end of the run

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion exercised by a test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    status = _CRITERIA.setdefault(number, [title, "PASS"])
    if report.when == "call" and report.skipped:
        status[1] = "SKIP" if status[1] == "PASS" else status[1]
    elif report.failed:
        status[1] = "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2} {status:<4} {title}")
