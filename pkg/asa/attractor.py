"""Helpers to compute the attractor of a problem."""

import logging

from .connections import heteroclinic_edges
from .equilibria import equilibria_from_curves
from .exceptions import NotSturmPermutationException
from .executor import AbstractExecutor, default_executor
from .objects.combinatorics import SturmPermutation, ZeroNumberTable
from .objects.curve import SampledCurve, Side
from .objects.equilibrium import EquilibriumRecord
from .objects.graph import ConnectionGraph
from .objects.problem import ProblemSpec
from .permutation import build_permutation, morse_from_permutation, zero_number_table
from .shooting import cross_section

log = logging.getLogger(__name__)


class Attractor:
    """
    Combinatorial description of the global attractor: equilibria, Sturm permutation,
    zero numbers and connection graph.

    If some equilibrium is not hyperbolic only the equilibria are available.
    """

    __slots__ = [
        "__spec",
        "__curve_u",
        "__curve_s",
        "__records",
        "__permutation",
        "__permutation_indices",
        "__ztable",
        "__graph",
    ]

    def __init__(
        self,
        spec: ProblemSpec,
        curve_u: SampledCurve,
        curve_s: SampledCurve,
        records: list[EquilibriumRecord],
        permutation: SturmPermutation | None = None,
        permutation_indices: list[int] | None = None,
        ztable: ZeroNumberTable | None = None,
        graph: ConnectionGraph | None = None,
    ):
        self.__spec = spec
        self.__curve_u = curve_u
        self.__curve_s = curve_s
        self.__records = sorted(records, key=lambda r: r.label)
        self.__permutation = permutation
        self.__permutation_indices = permutation_indices
        self.__ztable = ztable
        self.__graph = graph

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"spec={self.__spec!r}, "
            f"equilibria={len(self.__records)}, "
            f"permutation={self.__permutation!r}"
            ")"
        )

    @property
    def spec(self) -> ProblemSpec:
        return self.__spec

    @property
    def curve_u(self) -> SampledCurve:
        return self.__curve_u

    @property
    def curve_s(self) -> SampledCurve:
        return self.__curve_s

    @property
    def records(self) -> list[EquilibriumRecord]:
        """Equilibria in label order."""
        return list(self.__records)

    @property
    def permutation(self) -> SturmPermutation | None:
        return self.__permutation

    @property
    def morse_indices(self) -> list[int | None]:
        """Angle-based Morse indices in label order."""
        return [r.morse_index for r in self.__records]

    @property
    def permutation_indices(self) -> list[int] | None:
        """Morse indices from the permutation recursion."""
        return self.__permutation_indices

    @property
    def ztable(self) -> ZeroNumberTable | None:
        return self.__ztable

    @property
    def graph(self) -> ConnectionGraph | None:
        return self.__graph

    @property
    def non_hyperbolic(self) -> list[int]:
        return [r.label for r in self.__records if not r.hyperbolic]

    @property
    def hyperbolic(self) -> bool:
        return not self.non_hyperbolic

    def record(self, label: int) -> EquilibriumRecord:
        return self.__records[label - 1]

    def to_dict(self) -> dict:
        """
        Convert to a dictionary representation.

        :return: the attractor summary as a dictionary
        """
        graph = self.__graph
        return {
            "n_equilibria": len(self.__records),
            "equilibria": [r.to_dict() for r in self.__records],
            "non_hyperbolic": self.non_hyperbolic,
            "sigma": self.__permutation.sigma if self.__permutation is not None else None,
            "sigma_cycles": self.__permutation.cycle_notation() if self.__permutation is not None else None,
            "morse_indices": self.morse_indices,
            "morse_from_permutation": self.__permutation_indices,
            "zero_numbers": self.__ztable.to_dict() if self.__ztable is not None else None,
            "graph": (
                {
                    "nodes": len(graph.nodes),
                    "edges": [list(e) for e in graph.edges],
                    "index_drop_one_edges": [list(e) for e in graph.index_drop_one_edges()],
                }
                if graph is not None
                else None
            ),
        }


def attractor_for_problem(
    spec: ProblemSpec,
    executor: AbstractExecutor | None = None,
    with_spectrum: bool = True,
) -> Attractor:
    """
    Run the shooting → equilibria → permutation → connections pipeline.

    :param spec: Problem.
    :param executor: Executor for every parallel map of the pipeline.
    :param with_spectrum: Whether to compute eigenvalues of every equilibrium.
    :return: Attractor; without permutation, zero numbers and graph if some equilibrium
        isn't hyperbolic.
    """
    executor = default_executor(executor)
    numerics = spec.numerics
    log.info(f"Computing the attractor of {spec!r}")

    curve_u = cross_section(spec, Side.UNSTABLE, executor=executor)
    curve_s = cross_section(spec, Side.STABLE, executor=executor)
    records = equilibria_from_curves(curve_u, curve_s, spec, executor, with_spectrum)

    if not all(r.hyperbolic for r in records):
        log.warning(
            f"Non-hyperbolic equilibria {[r.label for r in records if not r.hyperbolic]}; "
            "skipping permutation and connections"
        )
        return Attractor(spec, curve_u, curve_s, records)

    permutation = build_permutation(records, numerics.merge_tol)
    try:
        permutation_indices = morse_from_permutation(permutation)
    except NotSturmPermutationException as ex:
        log.warning(f"Permutation gives no Morse indices: {ex}")
        permutation_indices = None

    ztable = zero_number_table(records, numerics.zero_eps, executor)
    graph = heteroclinic_edges(records, ztable, executor, numerics.tie_tol)
    return Attractor(
        spec, curve_u, curve_s, records, permutation, permutation_indices, ztable, graph
    )
