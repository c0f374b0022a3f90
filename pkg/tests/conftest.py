from pathlib import Path

import pytest

from relaxq.catalog import parse_query, read_catalog
from relaxq.distance import read_distances
from relaxq.stats import build_stats

DATA = Path(__file__).parent / "data"

_criteria: dict[int, dict] = {}


@pytest.fixture(scope="session")
def tv_catalog():
    return read_catalog(DATA / "tv_catalog.csv")


@pytest.fixture(scope="session")
def tv_model(tv_catalog):
    return read_distances(DATA / "tv_distances.csv", tv_catalog.schema)


@pytest.fixture(scope="session")
def tv_stats(tv_catalog, tv_model):
    return build_stats(tv_catalog, tv_model)


@pytest.fixture(scope="session")
def tv_query(tv_catalog):
    return parse_query("Brand:Samsung;Type:LED;Diagonal:50", tv_catalog.schema)


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion_number", None)
    if number is None:
        return
    entry = _criteria.setdefault(number, {"title": report.criterion_title, "failed": [], "ran": False})
    if report.when == "call" or report.failed:
        entry["ran"] = True
    if report.failed:
        entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion_number = marker.args[0]
        report.criterion_title = marker.args[1]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if not entry["ran"]:
            status = "SKIP"
        else:
            status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {status}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failing: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
