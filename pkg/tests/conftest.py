import json

import pytest

from sprayforge import cli

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def verify_all(tmp_path_factory):
    """One run of `sprayforge verify --all`: (exit code, {preset: report})."""
    out = tmp_path_factory.mktemp("verify")
    code = cli.main(["verify", "--all", "--out-dir", str(out)])
    reports = {}
    for path in out.glob("verify-*.json"):
        doc = json.loads(path.read_text())
        reports[doc["scenario"]] = doc
    return code, reports


@pytest.fixture
def record_criterion():
    def record(number, title, ok, detail=""):
        detail = detail.strip()
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
