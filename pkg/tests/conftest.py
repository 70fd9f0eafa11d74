import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# one PASS/FAIL line per acceptance criterion, filled by test_acceptance.report
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
