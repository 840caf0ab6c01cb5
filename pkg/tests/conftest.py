"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_OUTCOMES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, summary = marker.args
    # a failure in any phase fails the criterion; otherwise record the call phase
    if report.failed or (report.when == "call" and cid not in _OUTCOMES):
        _OUTCOMES[cid] = ("PASS" if report.passed else "FAIL", summary)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_OUTCOMES, key=lambda c: (int(c.rstrip("ab")), c)):
        status, summary = _OUTCOMES[cid]
        terminalreporter.write_line(f"criterion {cid}: {status} - {summary}")
