"""Equilibrium counts along a λ range and localisation of the bifurcations."""

import logging

import numpy as np

from .equilibria import find_intersections
from .exceptions import AsaException
from .executor import AbstractExecutor, default_executor
from .objects.curve import Side
from .objects.problem import ProblemSpec
from .permutation import permutation_from_roots
from .shooting import cross_section

log = logging.getLogger(__name__)

BISECTION_TOL = 1e-3


def count_equilibria(spec: ProblemSpec, executor: AbstractExecutor | None = None) -> dict:
    """
    Count equilibria at the problem's λ without profiles or spectra.

    :return: ``{"lambda", "count", "sigma", "flagged", "error"}``; on divergence the entry is
        flagged and ``count`` is ``None``.
    """
    entry = {"lambda": spec.lmbda, "count": None, "sigma": None, "flagged": False, "error": None}
    try:
        curve_u = cross_section(spec, Side.UNSTABLE, executor=executor)
        curve_s = cross_section(spec, Side.STABLE, executor=executor)
        roots = find_intersections(curve_u, curve_s, spec, executor)
    except AsaException as ex:
        log.warning(f"Scan at lambda={spec.lmbda} failed: {ex}")
        entry["flagged"] = True
        entry["error"] = str(ex)
        return entry
    entry["count"] = len(roots)
    try:
        entry["sigma"] = permutation_from_roots(roots, spec.numerics.merge_tol).sigma
    except AsaException as ex:
        log.warning(f"No permutation at lambda={spec.lmbda}: {ex}")
    return entry


def locate_change(
    spec: ProblemSpec,
    low: dict,
    high: dict,
    executor: AbstractExecutor | None = None,
    tol: float = BISECTION_TOL,
) -> dict:
    """
    Bisect between two scan entries with different counts down to an interval of ``tol``.

    :return: ``{"lambda", "interval", "from_count", "to_count"}``.
    """
    lo, hi = low["lambda"], high["lambda"]
    count_lo, count_hi = low["count"], high["count"]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        entry = count_equilibria(spec.with_lambda(mid), executor)
        if entry["count"] is None:
            log.warning(f"Bisection stopped at flagged lambda={mid}")
            break
        if entry["count"] == count_lo:
            lo = mid
        else:
            hi, count_hi = mid, entry["count"]
    log.info(f"Equilibrium count changes {count_lo} -> {count_hi} in [{lo:.6f}, {hi:.6f}]")
    return {
        "lambda": 0.5 * (lo + hi),
        "interval": [lo, hi],
        "from_count": count_lo,
        "to_count": count_hi,
    }


def scan_lambda(
    spec: ProblemSpec,
    lambda_min: float,
    lambda_max: float,
    steps: int,
    executor: AbstractExecutor | None = None,
    tol: float = BISECTION_TOL,
) -> dict:
    """
    Equilibrium counts at ``steps`` equidistant λ values and the λ where counts change.

    :raises ValueError: Unless ``lambda_min < lambda_max`` and ``steps ≥ 2``.
    :return: ``{"samples": [...], "bifurcations": [...]}``.
    """
    if not lambda_min < lambda_max:
        raise ValueError(f"Empty lambda range [{lambda_min}, {lambda_max}]")
    if steps < 2:
        raise ValueError(f"Scan needs at least 2 steps, got {steps}")
    executor = default_executor(executor)

    samples = [
        count_equilibria(spec.with_lambda(float(x)), executor)
        for x in np.linspace(lambda_min, lambda_max, steps)
    ]
    usable = [s for s in samples if s["count"] is not None]
    bifurcations = [
        locate_change(spec, low, high, executor, tol)
        for low, high in zip(usable, usable[1:])
        if low["count"] != high["count"]
    ]
    return {"samples": samples, "bifurcations": bifurcations}
