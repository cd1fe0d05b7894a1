import pytest

from acceptance_report import LINES


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES.values(), key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
