"""Shared pytest plumbing: the acceptance-criteria summary table.

Acceptance tests register one verdict each via :func:`record`; the
terminal-summary hook prints the whole table after the run so the
per-criterion outcome is visible even when every test passes.
"""

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record(num: int, name: str, passed: bool, details: str = "") -> None:
    ACCEPTANCE[num] = (name, bool(passed), details)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        name, passed, details = ACCEPTANCE[num]
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {num:2d}: {verdict}  {name}"
        if details:
            line += f"  ({details})"
        terminalreporter.write_line(line)
