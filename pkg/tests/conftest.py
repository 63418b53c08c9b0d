"""Per-criterion PASS/FAIL report for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n, "title")`` are grouped by ``n``; a
criterion passes when every test carrying its number passed.
"""

import pytest

_results: dict = {}
_titles: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _titles[number] = title
            _results.setdefault(number, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _results[mark.args[0]].append(report.passed and report.when == "call")


def pytest_terminal_summary(terminalreporter):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_titles):
        runs = _results[number]
        status = "PASS" if runs and all(runs) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {_titles[number]}")
