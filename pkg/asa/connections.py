"""
Heteroclinic connection graph from Morse indices and zero numbers.

Edges come from adjacency; cascades are an independent route used to cross-check it.
"""

import itertools
import logging

from .exceptions import IndeterminateAdjacencyException, NonHyperbolicException
from .executor import AbstractExecutor, default_executor
from .helpers import dump_json
from .objects.combinatorics import ZeroNumberTable
from .objects.equilibrium import EquilibriumRecord
from .objects.graph import ConnectionGraph

log = logging.getLogger(__name__)

TIE_TOL = 1e-8


def _by_label(records: list[EquilibriumRecord]) -> dict[int, EquilibriumRecord]:
    return {r.label: r for r in records}


def _require_hyperbolic(records: list[EquilibriumRecord]) -> None:
    for record in records:
        if not record.hyperbolic or record.morse_index is None:
            raise NonHyperbolicException(
                f"Equilibrium {record.label} is not hyperbolic, zeta={record.zeta}"
            )


def blocking_equilibria(
    j: int,
    k: int,
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    tie_tol: float = TIE_TOL,
) -> list[int]:
    """
    Labels ``m`` with ``u_m(0)`` strictly between ``u_j(0)`` and ``u_k(0)`` and
    ``z(u_j - u_m) = z(u_k - u_m)``.

    :raises ValueError: If ``j == k``.
    :raises IndeterminateAdjacencyException: On a tie at θ = 0 or a flagged zero number.
    """
    if j == k:
        raise ValueError(f"Adjacency needs two distinct equilibria, got {j} twice")
    by_label = _by_label(records)
    u_j, u_k = by_label[j].u_at_0, by_label[k].u_at_0
    low, high = min(u_j, u_k), max(u_j, u_k)

    blocking = []
    for m, record in sorted(by_label.items()):
        if m in (j, k):
            continue
        u_m = record.u_at_0
        if abs(u_m - u_j) <= tie_tol or abs(u_m - u_k) <= tie_tol:
            raise IndeterminateAdjacencyException(
                f"Equilibria {m} and {j if abs(u_m - u_j) <= tie_tol else k} tie at theta=0"
            )
        if not low < u_m < high:
            continue
        if ztable.is_flagged(j, m) or ztable.is_flagged(k, m):
            raise IndeterminateAdjacencyException(
                f"Zero numbers of {j}, {k} against {m} are unresolved"
            )
        if ztable(j, m) == ztable(k, m):
            blocking.append(m)
    return blocking


def adjacent(
    j: int,
    k: int,
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    tie_tol: float = TIE_TOL,
) -> bool:
    """
    Whether no equilibrium between ``u_j`` and ``u_k`` at θ = 0 has the same zero number
    against both.

    :raises ValueError: If ``j == k``.
    :raises IndeterminateAdjacencyException: If the answer depends on flagged zero numbers.
    """
    return not blocking_equilibria(j, k, records, ztable, tie_tol)


def heteroclinic_edges(
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    executor: AbstractExecutor | None = None,
    tie_tol: float = TIE_TOL,
) -> ConnectionGraph:
    """
    Connection graph with an edge ``j → k`` iff ``u_j``, ``u_k`` are adjacent and ``i_j > i_k``.

    :raises NonHyperbolicException: If an equilibrium isn't hyperbolic.
    :raises IndeterminateAdjacencyException: If some adjacency can't be decided.
    """
    _require_hyperbolic(records)
    executor = default_executor(executor)
    index = {r.label: r.morse_index for r in records}
    graph = ConnectionGraph(index)

    candidates = [
        (j, k)
        for j, k in itertools.permutations(sorted(index), 2)
        if index[j] > index[k]
    ]
    verdicts = executor.map(
        lambda pair: adjacent(pair[0], pair[1], records, ztable, tie_tol), candidates
    )
    for (j, k), is_adjacent in zip(candidates, verdicts):
        if is_adjacent:
            graph.add_edge(j, k)
    log.info(f"Connection graph has {len(graph.edges)} edges among {len(index)} equilibria")
    return graph


def find_cascade(
    j: int,
    k: int,
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    tie_tol: float = TIE_TOL,
) -> list[int] | None:
    """
    Cascade ``u_k = v_0, v_1, …, v_n = u_j`` with each step raising the Morse index by one,
    satisfying ``z(v_{m+1} - v_m) = i(v_m)`` and with ``v_m``, ``v_{m+1}`` adjacent.

    :raises ValueError: Unless ``i_j > i_k``.
    :return: Labels of the cascade, or ``None`` if there is none.
    """
    _require_hyperbolic(records)
    index = {r.label: r.morse_index for r in records}
    if not index[j] > index[k]:
        raise ValueError(
            f"Cascade from {k} to {j} needs i({j}) > i({k}), got {index[j]} and {index[k]}"
        )

    def extend(path: list[int]) -> list[int] | None:
        v = path[-1]
        if v == j:
            return path
        if index[v] >= index[j]:
            return None
        for w in sorted(index):
            if index[w] != index[v] + 1 or w in path:
                continue
            if ztable.is_flagged(v, w):
                raise IndeterminateAdjacencyException(f"Zero number of {v}, {w} is unresolved")
            if ztable(w, v) != index[v]:
                continue
            if not adjacent(v, w, records, ztable, tie_tol):
                continue
            found = extend(path + [w])
            if found is not None:
                return found
        return None

    return extend([k])


def cascadly_adjacent(
    j: int,
    k: int,
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    tie_tol: float = TIE_TOL,
) -> bool:
    """Whether a cascade from ``u_k`` up to ``u_j`` exists; see :func:`find_cascade`."""
    return find_cascade(j, k, records, ztable, tie_tol) is not None


def wolfrum_equivalence(
    records: list[EquilibriumRecord],
    ztable: ZeroNumberTable,
    executor: AbstractExecutor | None = None,
    tie_tol: float = TIE_TOL,
) -> dict:
    """
    Compare adjacency with cascade adjacency on every pair with different Morse indices.

    :return: ``{"pairs_considered", "pairs_compared", "mismatches"}``; each mismatch is
        ``[j, k, adjacent, cascadly_adjacent]`` with ``i_j > i_k``.
    """
    _require_hyperbolic(records)
    executor = default_executor(executor)
    index = {r.label: r.morse_index for r in records}
    considered = list(itertools.combinations(sorted(index), 2))
    compared = [
        (j, k) if index[j] > index[k] else (k, j)
        for j, k in considered
        if index[j] != index[k]
    ]

    def compare(pair):
        j, k = pair
        return (
            adjacent(j, k, records, ztable, tie_tol),
            cascadly_adjacent(j, k, records, ztable, tie_tol),
        )

    mismatches = []
    for (j, k), (direct, cascade) in zip(compared, executor.map(compare, compared)):
        if direct != cascade:
            log.warning(
                f"Pair {j} -> {k}: adjacent={direct} but cascadly adjacent={cascade}"
            )
            mismatches.append([j, k, direct, cascade])
    return {
        "pairs_considered": len(considered),
        "pairs_compared": len(compared),
        "mismatches": mismatches,
    }


def zero_number_range_violations(
    graph: ConnectionGraph, ztable: ZeroNumberTable
) -> list[dict]:
    """Edges ``j → k`` violating ``i_k ≤ z(u_j - u_k) < i_j``."""
    violations = []
    for j, k in graph.edges:
        z = ztable(j, k)
        if not graph.morse_index(k) <= z < graph.morse_index(j):
            violations.append(
                {
                    "edge": [j, k],
                    "z": z,
                    "i_from": graph.morse_index(j),
                    "i_to": graph.morse_index(k),
                }
            )
    return violations


def to_dot(graph: ConnectionGraph) -> str:
    """
    Graphviz document with one rank per Morse index, highest index on top.

    Nodes and edges are emitted in label order so the output is deterministic.
    """
    lines = ["digraph attractor {"]
    if graph.labels:
        lines += ["    rankdir=TB;", "    node [shape=circle];"]
        for index, labels in graph.levels().items():
            nodes = " ".join(f'{label} [label="{label}\\ni={index}"];' for label in labels)
            lines.append(f"    {{ rank=same; {nodes} }}")
        for j, k in graph.edges:
            lines.append(f"    {j} -> {k};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(graph: ConnectionGraph) -> str:
    """Adjacency-list JSON of the graph."""
    return dump_json(graph.to_dict())
