import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and (rep.when == "call" or outcome == "error"):
                label = "PASS" if outcome == "passed" else "FAIL"
                rows.append((int(m.group(1)), label, m.group(2).replace("_", " "), rep.duration))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, label, name, secs in sorted(rows):
        terminalreporter.write_line(f"{label} criterion {num}: {name} ({secs:.1f}s)")
