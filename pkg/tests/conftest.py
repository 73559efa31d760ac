import re

_CRITERION_RE = re.compile(r"::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one verdict line per acceptance criterion, uncaptured."""
    rows = []
    for category, verdict in (("passed", "PASS"), ("failed", "FAIL"),
                              ("error", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(category, []):
            match = _CRITERION_RE.search(report.nodeid)
            if match:
                number, label = match.groups()
                rows.append((int(number), label.replace("_", "-"), verdict))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, verdict in sorted(rows):
        terminalreporter.write_line(f"criterion {number:02d} {label}: {verdict}")
