import pytest

from cdrnet.graph import UndirectedGraph


def complete(nodes):
    nodes = list(nodes)
    return [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]


def make_graph(n, edges, reciprocated=None):
    return UndirectedGraph.from_edges(n, edges, reciprocated)


@pytest.fixture
def triangle():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)], [True] * 3)


@pytest.fixture
def star5():
    return make_graph(6, [(0, i) for i in range(1, 6)])


@pytest.fixture
def k4_pendant():
    return make_graph(5, complete(range(4)) + [(0, 4)])


@pytest.fixture
def triangle_pendant():
    # pendant node 3 hangs off node 0 ("A")
    return make_graph(4, [(0, 1), (1, 2), (0, 2), (0, 3)])


@pytest.fixture
def k10_k4():
    return make_graph(14, complete(range(10)) + complete(range(10, 14)))


# -- acceptance summary -----------------------------------------------------------

_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _results[report.nodeid] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _results.items():
        name = nodeid.split("::", 1)[1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
