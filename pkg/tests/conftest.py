"""Shared pytest hooks: acceptance criteria report one summary line each."""

ACCEPTANCE_KEY = "acceptance"


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            recorded = [v for k, v in rep.user_properties if k == ACCEPTANCE_KEY]
            if rep.failed and not any(v.startswith("[FAIL]") for v in recorded):
                name = rep.nodeid.split("::")[-1]  # test_<number>_<slug>
                recorded.append(f"[FAIL] {name.split('_')[1]} {name}: raised before reaching its tolerance check")
            lines.extend(recorded)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
