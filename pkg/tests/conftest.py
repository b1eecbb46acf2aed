import io

import pytest

from comcons.graph import WeightedGraph, load_edge_list

TWO_TRIANGLES = "a\tb\nb\tc\na\tc\nd\te\ne\tf\nd\tf\nc\td\n"


def graph_from_text(text: str) -> WeightedGraph:
    return load_edge_list(io.StringIO(text))


@pytest.fixture
def two_triangles() -> WeightedGraph:
    return graph_from_text(TWO_TRIANGLES)


@pytest.fixture
def two_triangles_file(tmp_path):
    path = tmp_path / "two_triangles.tsv"
    path.write_text(TWO_TRIANGLES)
    return path


# one summary line per acceptance criterion, printed after the run
_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, [title, True, []])
    if report.failed or (report.when == "setup" and report.skipped):
        entry[1] = False
    if report.when == "call":
        entry[2].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, details = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)
