import json

import numpy as np
import pytest

from asa.connections import (
    adjacent,
    blocking_equilibria,
    cascadly_adjacent,
    find_cascade,
    heteroclinic_edges,
    to_dot,
    to_json,
    wolfrum_equivalence,
    zero_number_range_violations,
)
from asa.exceptions import IndeterminateAdjacencyException, NonHyperbolicException
from asa.objects.combinatorics import ZeroNumberTable
from asa.objects.graph import ConnectionGraph
from asa.permutation import zero_number_table
from tests.helpers import ci_like_records, make_record

CI_EDGES = [(2, 1), (2, 5), (3, 1), (3, 2), (3, 4), (3, 5), (4, 1), (4, 5)]


@pytest.fixture
def records():
    return ci_like_records()


@pytest.fixture
def ztable(records):
    return zero_number_table(records)


class TestAdjacency:
    def test_blocking(self, records, ztable):
        assert blocking_equilibria(1, 5, records, ztable) == [2, 3, 4]
        assert blocking_equilibria(3, 1, records, ztable) == []
        assert not adjacent(1, 5, records, ztable)
        assert not adjacent(2, 4, records, ztable)
        assert adjacent(2, 5, records, ztable)

    def test_symmetric(self, records, ztable):
        for j in range(1, 6):
            for k in range(1, 6):
                if j != k:
                    assert adjacent(j, k, records, ztable) == adjacent(k, j, records, ztable)

    def test_same_equilibrium(self, records, ztable):
        with pytest.raises(ValueError):
            adjacent(2, 2, records, ztable)

    def test_tie_at_north_pole(self):
        theta = np.linspace(0.0, np.pi, 65)
        records = [
            make_record(1, np.full(65, -1.0), 0),
            make_record(2, -1.0 + 0.5 * np.sin(theta) ** 2, 1),
            make_record(3, np.full(65, 1.0), 0),
        ]
        with pytest.raises(IndeterminateAdjacencyException):
            adjacent(2, 3, records, zero_number_table(records))

    def test_configured_tie_tolerance(self):
        theta = np.linspace(0.0, np.pi, 65)
        records = [
            make_record(1, np.full(65, -1.0), 0),
            make_record(2, -1.0 + 5e-9 + 0.5 * np.sin(theta) ** 2, 1),
            make_record(3, np.full(65, 1.0), 0),
        ]
        ztable = ZeroNumberTable([[-1, 0, 0], [0, -1, 0], [0, 0, -1]])
        with pytest.raises(IndeterminateAdjacencyException):
            heteroclinic_edges(records, ztable)
        graph = heteroclinic_edges(records, ztable, tie_tol=1e-12)
        assert graph.edges == [(2, 1), (2, 3)]
        assert wolfrum_equivalence(records, ztable, tie_tol=1e-12)["mismatches"] == []

    def test_flagged_zero_number(self, records, ztable):
        flagged = ZeroNumberTable(ztable.matrix, {(2, 3)})
        with pytest.raises(IndeterminateAdjacencyException):
            adjacent(2, 5, records, flagged)
        # 3 is not between 1 and 2 at the north pole
        assert adjacent(2, 1, records, flagged)


class TestHeteroclinicEdges:
    def test_ci_like(self, records, ztable):
        graph = heteroclinic_edges(records, ztable)
        assert graph.edges == CI_EDGES
        assert graph.nodes == [(1, 0), (2, 1), (3, 2), (4, 1), (5, 0)]
        assert graph.is_acyclic()
        assert graph.is_graded()

    def test_zero_numbers_in_range(self, records, ztable):
        graph = heteroclinic_edges(records, ztable)
        assert zero_number_range_violations(graph, ztable) == []

    def test_non_hyperbolic(self, records, ztable):
        records[2] = make_record(3, np.zeros(65), 2, hyperbolic=False)
        with pytest.raises(NonHyperbolicException):
            heteroclinic_edges(records, ztable)


class TestCascades:
    def test_find_cascade(self, records, ztable):
        assert find_cascade(3, 1, records, ztable) == [1, 2, 3]
        assert find_cascade(4, 5, records, ztable) == [5, 4]
        assert cascadly_adjacent(3, 5, records, ztable)

    def test_needs_index_drop(self, records, ztable):
        with pytest.raises(ValueError):
            find_cascade(1, 3, records, ztable)
        with pytest.raises(ValueError):
            find_cascade(2, 4, records, ztable)

    def test_wolfrum_equivalence(self, records, ztable):
        result = wolfrum_equivalence(records, ztable)
        assert result == {"pairs_considered": 10, "pairs_compared": 8, "mismatches": []}


def test_range_violation():
    graph = ConnectionGraph({1: 0, 2: 2})
    graph.add_edge(2, 1)
    table = ZeroNumberTable([[-1, 2], [2, -1]])
    assert zero_number_range_violations(graph, table) == [
        {"edge": [2, 1], "z": 2, "i_from": 2, "i_to": 0}
    ]


class TestExport:
    def test_dot(self, records, ztable):
        dot = to_dot(heteroclinic_edges(records, ztable))
        lines = dot.splitlines()
        assert lines[0] == "digraph attractor {"
        assert lines[-1] == "}"
        assert '    { rank=same; 3 [label="3\\ni=2"]; }' in lines
        # highest level first
        assert lines.index('    { rank=same; 3 [label="3\\ni=2"]; }') < lines.index(
            '    { rank=same; 1 [label="1\\ni=0"]; 5 [label="5\\ni=0"]; }'
        )
        assert [line.strip() for line in lines if "->" in line] == [
            f"{j} -> {k};" for j, k in CI_EDGES
        ]

    def test_empty_dot(self):
        assert to_dot(ConnectionGraph()) == "digraph attractor {\n}\n"

    def test_json(self, records, ztable):
        graph = heteroclinic_edges(records, ztable)
        document = json.loads(to_json(graph))
        assert document == graph.to_dict()
        assert document["adjacency"]["3"] == [1, 2, 4, 5]
