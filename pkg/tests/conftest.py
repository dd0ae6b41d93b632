"""Shared pytest hooks: a one-line verdict per acceptance criterion."""

_ACCEPTANCE_PREFIX = "tests/test_acceptance.py::test_criterion_"


def _criterion_label(nodeid: str) -> str:
    # test_criterion_04_linear_convergence[...] -> " 4 linear convergence"
    name = nodeid.split("::", 1)[1].removeprefix("test_criterion_")
    name = name.split("[")[0]
    number, _, rest = name.partition("_")
    return f"{int(number):2d} {rest.replace('_', ' ')}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if not nodeid.replace("\\", "/").startswith(_ACCEPTANCE_PREFIX):
                continue
            if getattr(report, "when", "call") not in ("call", "collect"):
                if outcome != "error":
                    continue
            label = _criterion_label(nodeid)
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if outcome == "skipped":
                verdict = "SKIP"
            # a criterion with several parametrized cases fails as a whole
            if lines.get(label) != "FAIL":
                lines[label] = verdict
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label in sorted(lines, key=lambda s: int(s.split()[0])):
        terminalreporter.write_line(f"criterion {label}: {lines[label]}")
