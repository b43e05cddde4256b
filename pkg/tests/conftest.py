from hypothesis import settings

# fixed example sequence so every run of the suite checks the same cases
settings.register_profile("deterministic", derandomize=True, print_blob=True)
settings.load_profile("deterministic")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
