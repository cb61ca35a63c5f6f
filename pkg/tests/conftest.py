import re

import pytest


@pytest.fixture
def frame_files(tmp_path):
    """Write n tiny distinct frame files and return their paths."""

    def make(n=3, subdir="frames"):
        directory = tmp_path / subdir
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for i in range(n):
            path = directory / f"frame_{i:03d}.png"
            path.write_bytes(b"not-a-real-png-" + bytes([i]))
            paths.append(str(path))
        return paths

    return make


CRITERION_PATTERN = re.compile(r"::test_(p\d+|s\d+)_")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion (tests named test_pN_*)."""
    outcomes: dict[str, set[str]] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            match = CRITERION_PATTERN.search(nodeid)
            if match:
                outcomes.setdefault(match.group(1).upper(), set()).add(status)
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(outcomes):
        verdict = "PASS" if outcomes[criterion] == {"passed"} else "FAIL"
        terminalreporter.write_line(f"{criterion}: {verdict}")
