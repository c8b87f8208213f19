import pytest

from fracnls.elliptic import exact_profile
from fracnls.grid import PeriodicGrid
from fracnls.wave import solve_wave


@pytest.fixture(scope="session")
def grid():
    return PeriodicGrid(4096)


@pytest.fixture(scope="session")
def exact_15(grid):
    return exact_profile(1.5, grid)


@pytest.fixture(scope="session")
def wave_s1(grid):
    return solve_wave(1.0, 1.5, grid=grid)


@pytest.fixture(scope="session")
def wave_half(grid):
    return solve_wave(0.5, 2.0, grid=grid)


# -- acceptance summary ----------------------------------------------------------

_criteria = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark:
            number, title = mark.args
            entry = _criteria.setdefault(number, {"title": title, "nodes": set(), "failed": [], "ran": 0})
            entry["nodes"].add(item.nodeid)


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid in entry["nodes"]:
            if report.failed:
                entry["failed"].append(report.nodeid.split("::")[-1])
            elif report.when == "call":
                entry["ran"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        if entry["failed"]:
            status = "FAIL"
        elif entry["ran"] == len(entry["nodes"]):
            status = "PASS"
        else:
            status = "NOT RUN"
        line = f"criterion {number} ({entry['title']}): {status}"
        if entry["failed"]:
            line += f"  [failed: {', '.join(sorted(set(entry['failed'])))}]"
        tr.write_line(line)
