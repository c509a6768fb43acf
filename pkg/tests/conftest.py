"""Prints the acceptance summary: one pass/fail line per criterion."""
import re

_OUTCOMES: dict = {}
_NAME = re.compile(r"test_criterion_(\d+)_")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = _OUTCOMES.get(int(m.group(1)), True)
        _OUTCOMES[int(m.group(1))] = ok and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    from test_acceptance import CRITERIA, DETAILS

    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        if number not in _OUTCOMES:
            terminalreporter.write_line(f"criterion {number:2d} NOT RUN: {CRITERIA[number]}")
            continue
        verdict = "PASS" if _OUTCOMES[number] else "FAIL"
        detail = " || ".join(DETAILS.get(number, ["no detail recorded (error before evaluation)"]))
        terminalreporter.write_line(f"criterion {number:2d} {verdict}: {CRITERIA[number]} | {detail}")
