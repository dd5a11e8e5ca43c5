"""Sturm permutation, zero numbers and the Morse index recursion."""

import itertools
import logging

import numpy as np

from .exceptions import (
    NonHyperbolicException,
    NotSturmPermutationException,
    PermutationAmbiguityException,
)
from .executor import AbstractExecutor, default_executor
from .objects.combinatorics import SturmPermutation, ZeroNumberTable
from .objects.equilibrium import EquilibriumRecord
from .objects.grid import GridFunction

log = logging.getLogger(__name__)

REFINEMENT = 4
"""Grid refinement factor used to resolve near-tangencies."""


def _close_pairs(values: np.ndarray, merge_tol: float) -> list[tuple[int, int]]:
    order = np.argsort(values, kind="stable")
    gaps = np.diff(values[order])
    return [
        (int(order[i]) + 1, int(order[i + 1]) + 1)
        for i in np.flatnonzero(gaps <= merge_tol)
    ]


def permutation_from_roots(
    roots: list[tuple[float, float]], merge_tol: float = 1e-6
) -> SturmPermutation:
    """
    Sturm permutation of intersections ``(d, e)``.

    Labels are positions in ``d`` order; σ lists the labels in ``e`` order.

    :raises PermutationAmbiguityException: If two ``d`` or two ``e`` values are within ``merge_tol``.
    """
    d = np.array([r[0] for r in roots], dtype=float)
    e = np.array([r[1] for r in roots], dtype=float)
    for name, values in (("d", d), ("e", e)):
        offenders = _close_pairs(values, merge_tol)
        if offenders:
            raise PermutationAmbiguityException(
                f"Equilibria with {name} values closer than {merge_tol:g}", offenders
            )

    label = np.empty(len(d), dtype=int)
    label[np.argsort(d, kind="stable")] = np.arange(1, len(d) + 1)
    sigma = SturmPermutation(label[np.argsort(e, kind="stable")].tolist())
    if not sigma.is_dissipative_normalized:
        log.warning(
            f"Permutation {sigma.cycle_notation()} doesn't fix 1 and N; "
            "the stable curve may be oriented against e"
        )
    return sigma


def build_permutation(
    records: list[EquilibriumRecord], merge_tol: float = 1e-6
) -> SturmPermutation:
    """
    Sturm permutation from the equilibria's orders along the unstable and stable curves.

    CI with λ = 3 gives ``[1, 4, 3, 2, 5]``, the transposition ``(2,4)``.

    :param records: Equilibria.
    :param merge_tol: Minimum separation of ``d`` and of ``e`` values.
    :raises NonHyperbolicException: If an equilibrium isn't hyperbolic.
    :raises PermutationAmbiguityException: On duplicate ``d`` or ``e`` values, listing the offending label pairs.
    """
    for record in records:
        if not record.hyperbolic:
            raise NonHyperbolicException(
                f"Equilibrium {record.label} is not hyperbolic, zeta={record.zeta}"
            )
    return permutation_from_roots([(r.d, r.e) for r in records], merge_tol)


def morse_from_permutation(sigma: SturmPermutation) -> list[int]:
    """
    Morse indices in label order from the Sturm permutation alone.

    ``i_1 = 0`` and ``i_{m+1} = i_m + (-1)^{m+1} sign(σ⁻¹(m+1) - σ⁻¹(m))``.

    :raises NotSturmPermutationException: If σ doesn't fix 1 and N or an index comes out negative.
    """
    if not sigma.is_dissipative_normalized:
        raise NotSturmPermutationException(
            f"{sigma.cycle_notation()} does not fix 1 and {sigma.n}"
        )
    if sigma.n == 0:
        return []
    inverse = sigma.inverse()
    indices = [0]
    for m in range(1, sigma.n):
        step = (-1) ** (m + 1) * int(np.sign(inverse[m] - inverse[m - 1]))
        indices.append(indices[-1] + step)
        if indices[-1] < 0:
            raise NotSturmPermutationException(
                f"{sigma.sigma} gives negative Morse index at label {m + 1}"
            )
    return indices


# --- zero numbers ----------------------------------------------------------------


def _values(g) -> np.ndarray:
    if isinstance(g, GridFunction):
        return g.values
    return np.asarray(g, dtype=float)


def zero_number(g, zero_eps: float = 1e-9, scale: float = 1.0) -> int:
    """
    Number of strict sign changes of ``g`` on its grid.

    Values with ``|g| < zero_eps·scale`` count as zeros and are skipped.

    :param g: Grid function or array of values.
    :param zero_eps: Relative zero threshold.
    :param scale: Magnitude the threshold is relative to.
    :return: Sign changes, or ``-1`` if every value is a zero.
    """
    values = _values(g)
    nonzero = values[np.abs(values) >= zero_eps * scale]
    if len(nonzero) == 0:
        return -1
    signs = np.sign(nonzero)
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def near_tangencies(g, zero_eps: float = 1e-9, scale: float = 1.0) -> np.ndarray:
    """Interior nodes where both ``g`` and ``g_θ`` are below the zero threshold."""
    values = _values(g)
    n = len(values) - 1
    h = np.pi / n
    derivative = (values[2:] - values[:-2]) / (2.0 * h)
    threshold = zero_eps * scale
    interior = (np.abs(values[1:-1]) < threshold) & (np.abs(derivative) < threshold)
    return np.flatnonzero(interior) + 1


def _pair_zero_number(
    first: EquilibriumRecord, second: EquilibriumRecord, zero_eps: float
) -> tuple[int, bool]:
    scale = max(first.profile.sup_norm, second.profile.sup_norm) or 1.0
    g = first.profile.values - second.profile.values
    z = zero_number(g, zero_eps, scale)
    if len(near_tangencies(g, zero_eps, scale)) == 0:
        return z, False

    if first.interpolant is None or second.interpolant is None:
        log.warning(
            f"Near-tangency between equilibria {first.label} and {second.label} "
            "and no interpolant to refine it"
        )
        return z, True

    fine = np.linspace(0.0, np.pi, REFINEMENT * (len(g) - 1) + 1)
    g_fine = first.interpolant(fine) - second.interpolant(fine)
    z = zero_number(g_fine, zero_eps, scale)
    if len(near_tangencies(g_fine, zero_eps, scale)):
        log.warning(
            f"Unresolved near-tangency between equilibria {first.label} and {second.label}"
        )
        return z, True
    log.debug(f"Resolved near-tangency of {first.label}, {second.label} on the refined grid")
    return z, False


def zero_number_table(
    records: list[EquilibriumRecord],
    zero_eps: float = 1e-9,
    executor: AbstractExecutor | None = None,
) -> ZeroNumberTable:
    """
    Zero numbers ``z(u_j - u_k)`` of all pairs of equilibrium profiles.

    Pairs whose difference touches zero without a sign change are recounted on a grid
    refined ×4 through the profile interpolants; if that doesn't resolve them the entry is
    flagged.

    :param records: Equilibria labelled ``1..N``.
    :param zero_eps: Zero threshold relative to the larger sup norm of each pair.
    :param executor: Executor for the pairs.
    """
    executor = default_executor(executor)
    records = sorted(records, key=lambda r: r.label)
    n = len(records)
    if [r.label for r in records] != list(range(1, n + 1)):
        raise ValueError(f"Labels must be 1..{n}, got {[r.label for r in records]}")

    pairs = list(itertools.combinations(range(n), 2))
    results = executor.map(
        lambda pair: _pair_zero_number(records[pair[0]], records[pair[1]], zero_eps), pairs
    )

    z = -np.ones((n, n), dtype=int)
    flagged = set()
    for (j, k), (value, unresolved) in zip(pairs, results):
        z[j, k] = z[k, j] = value
        if unresolved:
            flagged.add((j + 1, k + 1))
    return ZeroNumberTable(z, flagged)
