import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: dict[int, dict] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "status": "PASS", "seconds": 0.0})
    entry["seconds"] += report.duration
    if report.when == "call" or report.outcome != "passed":
        if report.skipped:
            if entry["status"] == "PASS":
                entry["status"] = "SKIP"
        elif report.failed:
            entry["status"] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        terminalreporter.write_line(f"AC{number} {e['status']:<4}  {e['title']}  ({e['seconds']:.1f} s)")
