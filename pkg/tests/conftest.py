"""Shared pytest plumbing: surface the acceptance-criteria summary lines."""

_CRITERIA_LINES: list = []


def record_criterion(line: str) -> None:
    """Stash a one-line acceptance verdict for the end-of-run summary."""
    _CRITERIA_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERIA_LINES:
        terminalreporter.write_line(line)
