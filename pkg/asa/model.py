"""Problem definitions: config loading, presets, dissipativity and symmetry probes."""

import configparser
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    ExpressionSyntaxError,
    ProblemConfigException,
    UnknownIdentifierError,
)
from .expression import evaluate_constant
from .objects.combinatorics import SturmPermutation
from .objects.problem import CoefficientField, Numerics, ProblemSpec
from .objects.report import DissipativityCondition, DissipativityReport

log = logging.getLogger(__name__)

CHAFEE_INFANTE_A = "1"
CHAFEE_INFANTE_F = "lambda*u*(1-u^2)"

_PROBLEM_KEYS = {"name", "a", "f", "lambda"}
_NUMERICS_FIELDS = {f.name: f for f in dataclasses.fields(Numerics)}


def chafee_infante(lmbda: float, **numerics) -> ProblemSpec:
    """
    Chafee–Infante problem ``u_t = Δu + λu(1 - u²)`` on the sphere.

    :param lmbda: Reaction strength λ.
    :param numerics: Overrides of :class:`~.Numerics` fields.
    """
    return ProblemSpec(
        a=CHAFEE_INFANTE_A,
        f=CHAFEE_INFANTE_F,
        lmbda=lmbda,
        numerics=Numerics(**numerics),
        name="chafee-infante",
    )


def load_problem(path: str | Path) -> ProblemSpec:
    """
    Read a problem from an INI file with ``[problem]`` and ``[numerics]`` sections.

    :param path: Config file path.
    :raises ProblemConfigException: If the file is missing, malformed, or has unknown keys.
    :raises ExpressionSyntaxError: If a coefficient expression is malformed.
    :raises UnknownIdentifierError: If a coefficient expression uses unknown names.
    :return: Problem instance.
    """
    path = Path(path)
    if not path.is_file():
        raise ProblemConfigException(f"Config file {path} does not exist")

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as ex:
        raise ProblemConfigException(f"Unable to parse {path}: {ex}")

    log.info(f"Loaded problem config {path}")
    return problem_from_config(parser, default_name=path.stem)


def problem_from_config(
    parser: configparser.ConfigParser, default_name: str = "problem"
) -> ProblemSpec:
    """
    Build a problem from parsed config sections.

    Numeric values may be constant expressions such as ``pi/2``.
    """
    unknown_sections = set(parser.sections()) - {"problem", "numerics"}
    if unknown_sections:
        raise ProblemConfigException(f"Unknown config sections: {sorted(unknown_sections)}")
    if not parser.has_section("problem"):
        raise ProblemConfigException("Config has no [problem] section")

    problem = parser["problem"]
    unknown = set(problem) - _PROBLEM_KEYS
    if unknown:
        raise ProblemConfigException(f"Unknown keys in [problem]: {sorted(unknown)}")
    for key in ("a", "f"):
        if not problem.get(key, "").strip():
            raise ProblemConfigException(f"[problem] {key} is required")

    lmbda = _constant("problem", "lambda", problem.get("lambda", "0"))

    numerics = {}
    if parser.has_section("numerics"):
        section = parser["numerics"]
        unknown = set(section) - set(_NUMERICS_FIELDS)
        if unknown:
            raise ProblemConfigException(f"Unknown keys in [numerics]: {sorted(unknown)}")
        for key, raw in section.items():
            if _NUMERICS_FIELDS[key].type is int:
                try:
                    numerics[key] = int(raw)
                except ValueError:
                    raise ProblemConfigException(f"[numerics] {key}: integer expected, got '{raw}'")
            else:
                numerics[key] = _constant("numerics", key, raw)

    return ProblemSpec(
        a=problem["a"].strip(),
        f=problem["f"].strip(),
        lmbda=lmbda,
        numerics=Numerics(**numerics),
        name=problem.get("name", default_name).strip(),
    )


def _constant(section: str, key: str, raw: str) -> float:
    try:
        return evaluate_constant(raw)
    except (ExpressionSyntaxError, UnknownIdentifierError) as ex:
        raise ProblemConfigException(f"[{section}] {key}: {ex}")


# --- Chafee–Infante oracles --------------------------------------------------


def laplacian_eigenvalue(k: int) -> int:
    """Eigenvalue ``k(k+1)`` of ``-Δ`` on axisymmetric functions, eigenfunction ``P_k(cos θ)``."""
    return k * (k + 1)


def bifurcation_level(lmbda: float) -> int:
    """
    The ``k`` with ``k(k+1) < λ < (k+1)(k+2)``.

    :raises ValueError: For ``λ ≤ 0`` or λ at a bifurcation point.
    """
    if lmbda <= 0:
        raise ValueError(f"lambda must be positive, got {lmbda}")
    k = 0
    while laplacian_eigenvalue(k + 1) < lmbda:
        k += 1
    if math.isclose(lmbda, laplacian_eigenvalue(k + 1), abs_tol=1e-12):
        raise ValueError(f"lambda={lmbda} is a bifurcation point")
    return k


def expected_equilibrium_count(lmbda: float) -> int:
    """``2k + 3`` Chafee–Infante equilibria for ``λ ∈ (k(k+1), (k+1)(k+2))``."""
    return 2 * bifurcation_level(lmbda) + 3


def expected_permutation(lmbda: float) -> SturmPermutation:
    """Closed form ``σ = (2, N-1)(4, N-3)…`` of the Chafee–Infante permutation."""
    n = expected_equilibrium_count(lmbda)
    cycles = []
    low, high = 2, n - 1
    while low < high:
        cycles.append((low, high))
        low, high = low + 2, high - 2
    return SturmPermutation.from_cycles(n, cycles)


def expected_morse_indices(lmbda: float) -> list[int]:
    """Morse indices ``[0, 1, …, k+1, …, 1, 0]`` in label order."""
    n = expected_equilibrium_count(lmbda)
    return [min(m - 1, n - m) for m in range(1, n + 1)]


# --- probes ----------------------------------------------------------------


def _probe_points(samples: int, seed: int):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.05, math.pi - 0.05, samples)
    u = rng.uniform(-2.0, 2.0, samples)
    p = rng.uniform(-2.0, 2.0, samples)
    return theta, u, p


def _close(x, y, tol: float) -> bool:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return bool(np.all(np.abs(x - y) <= tol * (1.0 + np.abs(x))))


def is_reflection_symmetric(
    field: CoefficientField, samples: int = 64, seed: int = 0, tol: float = 1e-12
) -> bool:
    """
    Whether the equation is invariant under ``θ ↦ π - θ`` (which maps ``u_θ`` to ``-u_θ``).
    """
    theta, u, p = _probe_points(samples, seed)
    return _close(field.a(theta, u, p), field.a(math.pi - theta, u, -p), tol) and _close(
        field.f(theta, u, p), field.f(math.pi - theta, u, -p), tol
    )


def is_odd_in_u(
    field: CoefficientField, samples: int = 64, seed: int = 0, tol: float = 1e-12
) -> bool:
    """Whether the equation is invariant under ``u ↦ -u``."""
    theta, u, p = _probe_points(samples, seed)
    return _close(field.a(theta, u, p), field.a(theta, -u, -p), tol) and _close(
        -field.f(theta, u, p), field.f(theta, -u, -p), tol
    )


def is_p_independent(
    field: CoefficientField, samples: int = 64, seed: int = 0, tol: float = 1e-12
) -> bool:
    """Whether ``f/a`` doesn't depend on ``u_θ``, probed at ``p = 0`` against random ``p``."""
    theta, u, p = _probe_points(samples, seed)
    return _close(field.f_over_a(theta, u, 0.0 * p), field.f_over_a(theta, u, p), tol)


# --- dissipativity ------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SampleBox:
    """Sample ranges for :func:`check_dissipativity`."""

    theta_samples: int = 17
    u_max: float = 4.0
    u_samples: int = 41
    p_max: float = 4.0
    p_samples: int = 21
    sign_threshold: float = 2.0
    """The sign condition ``f(θ, u, 0)·u < 0`` is checked for ``|u| ≥ sign_threshold``."""


def _first_failure(mask: np.ndarray, theta, u, p) -> dict | None:
    bad = np.flatnonzero(mask.ravel())
    if len(bad) == 0:
        return None
    i = bad[0]
    return {
        "theta": float(theta.ravel()[i]),
        "u": float(u.ravel()[i]),
        "p": float(p.ravel()[i]),
    }


def check_dissipativity(spec: ProblemSpec, box: SampleBox | None = None) -> DissipativityReport:
    """
    Sample the dissipativity conditions on a box of ``(θ, u, p)`` values.

    A sampled check can only falsify the conditions. The growth bound
    ``|f| < f₁(u) + f₂(u)|p|^γ`` with ``γ < 2`` is not checkable on a bounded box and is
    reported with ``holds=None``.

    :param spec: Problem.
    :param box: Sample ranges.
    :return: Report with one entry per condition and the first counterexample of each failure.
    """
    box = box if box is not None else SampleBox()
    field = spec.field
    eps = spec.numerics.min_diffusion
    delta = spec.numerics.max_diffusion

    theta_1d = np.linspace(0.0, math.pi, box.theta_samples + 2)[1:-1]
    u_1d = np.linspace(-box.u_max, box.u_max, box.u_samples)
    p_1d = np.linspace(-box.p_max, box.p_max, box.p_samples)
    theta, u, p = np.meshgrid(theta_1d, u_1d, p_1d, indexing="ij")

    conditions = []

    with np.errstate(all="ignore"):
        a = field.a(theta, u, p)
    bad = ~(a >= eps) | ~(a <= delta)
    conditions.append(
        DissipativityCondition(
            "parabolicity",
            not bad.any(),
            _first_failure(bad, theta, u, p),
            f"a in [{np.nanmin(a):.6g}, {np.nanmax(a):.6g}], required {eps:g} <= a <= {delta:g}",
        )
    )

    with np.errstate(all="ignore"):
        signs = field.f(theta, u, 0.0 * p) * u
    relevant = np.abs(u) >= box.sign_threshold
    bad = relevant & ~(signs < 0)
    conditions.append(
        DissipativityCondition(
            "sign",
            not bad.any(),
            _first_failure(bad, theta, u, 0.0 * p),
            f"f(theta, u, 0)*u < 0 checked for |u| >= {box.sign_threshold:g}",
        )
    )

    with np.errstate(all="ignore"):
        growth = (
            np.abs(field.da_dtheta(theta, u, p)) / (1.0 + np.abs(p))
            + np.abs(field.da_du(theta, u, p))
            + np.abs(field.da_dp(theta, u, p)) * (1.0 + np.abs(p))
        )
    bad = ~np.isfinite(growth)
    conditions.append(
        DissipativityCondition(
            "diffusion-growth",
            not bad.any(),
            _first_failure(bad, theta, u, p),
            f"|a_theta|/(1+|p|) + |a_u| + |a_p|(1+|p|) <= {np.nanmax(growth):.6g} on the box",
        )
    )

    conditions.append(
        DissipativityCondition(
            "reaction-growth",
            None,
            None,
            "subquadratic growth of f in p can't be falsified on a bounded box; not checked",
        )
    )

    report = DissipativityReport(conditions)
    for condition in report.failures:
        log.warning(
            f"Dissipativity condition '{condition.name}' fails at {condition.counterexample}"
        )
    return report
