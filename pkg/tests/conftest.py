import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_criteria = {}
_criterion_of = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = _criterion_of.get(report.nodeid)
    if label is None:
        return
    _criteria.setdefault(label, []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criterion_of[item.nodeid] = str(mark.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: (int("".join(c for c in s if c.isdigit()) or 0), s)):
        results = _criteria[label]
        ok = all(outcome == "passed" for _, outcome in results)
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}"
        if not ok:
            failed = [name for name, outcome in results if outcome != "passed"]
            line += f"  ({', '.join(failed)})"
        tr.write_line(line)
