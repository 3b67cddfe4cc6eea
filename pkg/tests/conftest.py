import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from kroute.graph import CutInstance, Edge, MultiGraph  # noqa: E402

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


def parallel(count, k=2, cost=1, variant="edge"):
    edges = tuple(Edge(0, 1, cost) for _ in range(count))
    g = MultiGraph(2, edges)
    if variant == "multiway":
        return CutInstance(g, (), k, "multiway", (0, 1))
    return CutInstance(g, ((0, 1),), k, variant)


def triangle(costs=(1, 1, 1), variant="multiway", k=1):
    g = MultiGraph(3, (Edge(0, 1, costs[0]), Edge(1, 2, costs[1]), Edge(0, 2, costs[2])))
    return CutInstance(g, (), k, variant, (0, 1, 2))


@pytest.fixture
def pair2():
    return parallel(2)
