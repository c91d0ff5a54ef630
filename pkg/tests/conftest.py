import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

_criteria: dict = {}
_outcomes: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _criteria.setdefault(number, [title, []])[1].append(item.nodeid)


def pytest_runtest_logreport(report):
    if report.failed:
        _outcomes[report.nodeid] = "failed"
    elif report.when == "call":
        _outcomes.setdefault(report.nodeid, "skipped" if report.skipped else "passed")
    elif report.skipped:
        _outcomes.setdefault(report.nodeid, "skipped")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, nodeids = _criteria[number]
        states = [_outcomes.get(n, "not run") for n in nodeids]
        if all(s == "passed" for s in states):
            verdict = "PASS"
        elif "failed" in states:
            verdict = "FAIL"
        else:
            verdict = "INCOMPLETE"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title} ({states.count('passed')}/{len(states)} tests)")
