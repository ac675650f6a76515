"""Shared pytest wiring: the acceptance-criteria verdict block.

Tests named ``test_criterion_<n>_*`` in test_acceptance.py are release
criteria; after any run that includes them, a summary section prints
one PASS/FAIL/SKIP line per criterion.
"""

import re

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")

_labels: dict[str, tuple[int, str]] = {}
_verdicts: dict[int, tuple[str, str, str]] = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "test_acceptance" not in item.nodeid:
            continue
        m = _CRITERION_RE.search(item.name)
        if m is None:
            continue
        doc = (item.function.__doc__ or "").strip().splitlines()
        label = doc[0].rstrip(".") if doc else item.name
        _labels[item.nodeid] = (int(m.group(1)), label)


def _skip_reason(report) -> str:
    if isinstance(report.longrepr, tuple):
        reason = report.longrepr[2]
    else:
        reason = str(report.longrepr)
    return reason.removeprefix("Skipped: ")


def pytest_runtest_logreport(report):
    info = _labels.get(report.nodeid)
    if info is None:
        return
    number, label = info
    if report.when == "setup":
        if report.skipped:
            _verdicts[number] = ("SKIP", label, _skip_reason(report))
        elif report.failed:
            _verdicts[number] = ("FAIL", label, "setup error")
    elif report.when == "call":
        if report.passed:
            _verdicts[number] = ("PASS", label, "")
        elif report.skipped:
            _verdicts[number] = ("SKIP", label, _skip_reason(report))
        else:
            _verdicts[number] = ("FAIL", label, "")
    elif report.when == "teardown" and report.failed:
        _verdicts[number] = ("FAIL", label, "teardown error")


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        verdict, label, reason = _verdicts[number]
        line = f"criterion {number} ({label}): {verdict}"
        if reason:
            line += f" [{reason}]"
        terminalreporter.write_line(line)
