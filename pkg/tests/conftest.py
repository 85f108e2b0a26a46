"""Collects acceptance results so the run ends with one line per criterion."""

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for result in sorted(ACCEPTANCE_RESULTS, key=lambda r: r.number):
        terminalreporter.write_line(result.line())
