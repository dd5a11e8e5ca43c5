"""Heteroclinic connection graph."""

import networkx as nx


class ConnectionGraph:
    """
    Directed graph on equilibrium labels; an edge ``j → k`` means a heteroclinic orbit
    from ``u_j`` to ``u_k``.

    Every edge strictly decreases the Morse index, so the graph is acyclic.
    """

    __slots__ = [
        "__graph",
    ]

    def __init__(self, morse_indices: dict[int, int] | None = None):
        """
        :param morse_indices: ``{label: morse index}`` of the nodes.
        """
        self.__graph = nx.DiGraph()
        for label, index in sorted((morse_indices or {}).items()):
            self.add_node(label, index)

    def add_node(self, label: int, morse_index: int) -> None:
        self.__graph.add_node(int(label), morse_index=int(morse_index))

    def add_edge(self, source: int, target: int) -> None:
        """
        :raises ValueError: If the nodes are unknown or the edge doesn't decrease the Morse index.
        """
        if source not in self.__graph or target not in self.__graph:
            raise ValueError(f"Unknown node in edge {source} -> {target}")
        if self.morse_index(source) <= self.morse_index(target):
            raise ValueError(
                f"Edge {source} -> {target} does not decrease the Morse index "
                f"({self.morse_index(source)} -> {self.morse_index(target)})"
            )
        self.__graph.add_edge(int(source), int(target))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConnectionGraph):
            raise NotImplementedError
        return self.nodes == other.nodes and self.edges == other.edges

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"nodes={len(self.nodes)}, "
            f"edges={len(self.edges)}"
            ")"
        )

    @property
    def graph(self) -> nx.DiGraph:
        """Underlying NetworkX graph (don't modify)."""
        return self.__graph

    @property
    def nodes(self) -> list[tuple[int, int]]:
        """``(label, morse index)`` sorted by label."""
        return sorted(
            (label, data["morse_index"]) for label, data in self.__graph.nodes(data=True)
        )

    @property
    def labels(self) -> list[int]:
        return sorted(self.__graph.nodes)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.__graph.edges)

    def morse_index(self, label: int) -> int:
        return self.__graph.nodes[label]["morse_index"]

    def has_edge(self, source: int, target: int) -> bool:
        return self.__graph.has_edge(source, target)

    def successors(self, label: int) -> list[int]:
        return sorted(self.__graph.successors(label))

    def index_drop_one_edges(self) -> list[tuple[int, int]]:
        """Edges between consecutive Morse levels."""
        return [
            (j, k)
            for j, k in self.edges
            if self.morse_index(j) - self.morse_index(k) == 1
        ]

    def levels(self) -> dict[int, list[int]]:
        """Labels grouped by Morse index, highest index first."""
        levels = {}
        for label, index in self.nodes:
            levels.setdefault(index, []).append(label)
        return {i: levels[i] for i in sorted(levels, reverse=True)}

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.__graph)

    def is_graded(self) -> bool:
        """Every directed path strictly decreases the Morse index."""
        return all(self.morse_index(j) > self.morse_index(k) for j, k in self.edges)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"label": label, "morse_index": index} for label, index in self.nodes],
            "edges": [list(edge) for edge in self.edges],
            "adjacency": {str(label): self.successors(label) for label in self.labels},
        }
