"""Shared fixtures and the acceptance-summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from sdra import graphs


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import acceptance_report

    if not acceptance_report.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_report.lines():
        terminalreporter.write_line(line)


@pytest.fixture
def path4() -> graphs.Graph:
    return graphs.Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def triangle() -> graphs.Graph:
    return graphs.Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def star6() -> graphs.Graph:
    return graphs.Graph.from_edges(6, [(0, i) for i in range(1, 6)])


@pytest.fixture
def five_node_demo() -> graphs.Graph:
    """Five nodes A..E (0..4) whose best priority order is E,D,B,C,A.

    Edges place B and D centrally; the order 4,3,1,2,0 has a maximum
    prefix cut of 3 (after B, before C).
    """
    a, b, c, d, e = 0, 1, 2, 3, 4
    return graphs.Graph.from_edges(
        5, [(e, d), (d, b), (e, b), (b, c), (b, a), (d, c)]
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
