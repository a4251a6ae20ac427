"""Shared pytest plumbing: surface acceptance verdicts in the run summary."""

# filled by tests/test_acceptance.py as criteria execute
acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)
