"""Shared test plumbing.

The acceptance tests record one PASS/FAIL line per criterion; the lines are
replayed as a terminal section at the end of the run so the verdicts stay
visible even when individual test output is captured.
"""
from __future__ import annotations

import pytest


class AcceptanceLog:
    def __init__(self):
        self.lines: list[tuple[str, bool, str]] = []

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        """Record the verdict, print it, and fail the test when not ok."""
        ok = bool(ok)
        self.lines.append((name, ok, detail))
        verdict = "PASS" if ok else "FAIL"
        print(f"[acceptance] {name}: {verdict}" + (f" - {detail}" if detail else ""))
        assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def acceptance(pytestconfig) -> AcceptanceLog:
    log = getattr(pytestconfig, "_acceptance_log", None)
    if log is None:
        log = AcceptanceLog()
        pytestconfig._acceptance_log = log
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_acceptance_log", None)
    if log is None or not log.lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in log.lines:
        verdict = "PASS" if ok else "FAIL"
        line = f"{verdict}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
