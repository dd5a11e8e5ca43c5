"""
Property suites run by ``asa verify``.

Every suite takes a :class:`VerificationContext` and returns one :class:`~.CheckResult`.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from scipy.special import eval_legendre

from .attractor import Attractor, attractor_for_problem
from .connections import wolfrum_equivalence, zero_number_range_violations
from .exceptions import AsaException, BlowUpException, UnsupportedEnergyException
from .executor import AbstractExecutor, default_executor
from .model import is_odd_in_u, is_reflection_symmetric
from .objects.curve import Side
from .objects.grid import GridFunction, theta_grid
from .objects.problem import ProblemSpec
from .objects.report import CheckResult, CheckStatus, Outcome
from .pde import (
    discrete_targets,
    dissipation_rate,
    laplacian_axisym,
    lyapunov_energy,
    random_initial_condition,
    simulate,
    verify_heteroclinic,
    zero_number_track,
)
from .shooting import polar_trajectories, shoot_batch, tau_of_theta

log = logging.getLogger(__name__)

MONOTONICITY_TOL = 1e-10
SYMMETRY_TOL = 1e-8
SPECTRUM_TOL = 1e-6
ENERGY_TOL = 1e-8
DISSIPATION_RMS = 0.05
SPECTRAL_ORDER = 1.9

DROPPING_PAIRS = 100
DROPPING_STEPS = 1000
DROPPING_T_END = 5.0
LYAPUNOV_TRAJECTORIES = 50
LYAPUNOV_T_END = 1.0


class VerificationContext:
    """
    Shared state of a verification run; the attractor is computed on first use.
    """

    __slots__ = [
        "__spec",
        "__executor",
        "__seed",
        "__ensemble",
        "__attractor",
    ]

    def __init__(
        self,
        spec: ProblemSpec,
        executor: AbstractExecutor | None = None,
        seed: int | None = None,
        ensemble: int | None = None,
        attractor: Attractor | None = None,
    ):
        """
        :param spec: Problem.
        :param executor: Executor passed to every computation.
        :param seed: Random seed of the ensembles; ``numerics.seed`` if ``None``.
        :param ensemble: Ensemble size overriding each suite's default.
        :param attractor: Precomputed attractor.
        """
        self.__spec = spec
        self.__executor = default_executor(executor)
        self.__seed = spec.numerics.seed if seed is None else seed
        self.__ensemble = ensemble
        self.__attractor = attractor

    @property
    def spec(self) -> ProblemSpec:
        return self.__spec

    @property
    def executor(self) -> AbstractExecutor:
        return self.__executor

    @property
    def seed(self) -> int:
        return self.__seed

    def ensemble(self, default: int) -> int:
        return default if self.__ensemble is None else self.__ensemble

    def rng(self, stream: int) -> np.random.Generator:
        """Independent generator per suite so that suites don't depend on their order."""
        return np.random.default_rng([self.__seed, stream])

    @property
    def attractor(self) -> Attractor:
        if self.__attractor is None:
            self.__attractor = attractor_for_problem(self.__spec, self.__executor)
        return self.__attractor


def _skipped(name: str, reason: str) -> CheckResult:
    log.info(f"Skipping suite '{name}': {reason}")
    return CheckResult(name, CheckStatus.SKIPPED, reason)


def _need_graph(name: str, context: VerificationContext) -> CheckResult | None:
    if not context.attractor.hyperbolic:
        return CheckResult(
            name,
            CheckStatus.FAILED,
            f"non-hyperbolic equilibria {context.attractor.non_hyperbolic}",
        )
    return None


# --- suites ------------------------------------------------------------------------


def _unit_disc_bound(ds: np.ndarray, rho: np.ndarray) -> float | None:
    """Largest ``d`` of the leading run of trajectories that stay inside the unit disc."""
    inside = np.max(rho, axis=1) < 1.0
    run = len(inside) if inside.all() else int(np.argmin(inside))
    return float(ds[run - 1]) if run >= 2 else None


def check_monotonicity(context: VerificationContext) -> CheckResult:
    """
    Angle and radius monotonicity of unstable trajectories for ``d ∈ (0, 1)``, and angle
    monotonicity in λ.

    The radius is compared only for ``d`` whose trajectories stay inside the unit disc;
    closer to ``d = 1`` they pass outside and come back towards the equilibrium ``u ≡ 1``
    of radius one.
    """
    name = "monotonicity"
    spec = context.spec
    if not (spec.lmbda > 0 and is_odd_in_u(spec.field)):
        return _skipped(name, "needs lambda > 0 and a reaction odd in u")

    numerics = spec.numerics
    taus = np.linspace(tau_of_theta(0.2), tau_of_theta(math.pi - 0.2), 20)
    ds = np.linspace(0.05, 0.95, 20)
    lambdas = np.linspace(0.5 * spec.lmbda, 1.5 * spec.lmbda, 20)

    mu, rho = polar_trajectories(spec.field, ds, taus, numerics)
    mu_lambda = np.array(
        [
            polar_trajectories(spec.with_lambda(x).field, [0.5], taus, numerics)[0][0]
            for x in lambdas
        ]
    )
    properties = [("angle in d", mu, -1.0), ("angle in lambda", mu_lambda, 1.0)]

    radius_bound = _unit_disc_bound(ds, rho)
    if radius_bound is not None:
        radius_ds = np.linspace(ds[0], radius_bound, 20)
        _, radius = polar_trajectories(spec.field, radius_ds, taus, numerics)
        properties.insert(1, ("radius in d", radius, 1.0))
    else:
        log.warning("No two trajectories stay inside the unit disc, skipping the radius")

    violations = []
    for what, values, sign in properties:
        increments = sign * np.diff(values, axis=0)
        for i, j in zip(*np.nonzero(~(increments > MONOTONICITY_TOL))):
            violations.append(
                {"property": what, "sample": int(i), "tau": float(taus[j]), "increment": float(increments[i, j])}
            )
    return CheckResult.from_violations(
        name,
        violations,
        {"grid": [len(ds), len(taus)], "radius_d_max": radius_bound, "tolerance": MONOTONICITY_TOL},
    )


def check_symmetry(context: VerificationContext) -> CheckResult:
    """Odd symmetry of the shooting curves, the stable/unstable reflection and ±d spectra."""
    name = "symmetry"
    spec = context.spec
    numerics = spec.numerics
    odd = is_odd_in_u(spec.field)
    reflection = is_reflection_symmetric(spec.field)
    if not (odd or reflection):
        return _skipped(name, "problem has no symmetry")

    cut = numerics.theta_cut
    params = np.linspace(0.05, min(numerics.d_max, -numerics.d_min, 1.2), 20)
    violations = []

    if odd:
        points, diverged = shoot_batch(
            spec.field, Side.UNSTABLE, np.concatenate([params, -params]), cut, numerics
        )
        plus, minus = points[: len(params)], points[len(params) :]
        ok = ~diverged[: len(params)] & ~diverged[len(params) :]
        error = np.max(np.abs(plus + minus), axis=1)
        for d, err in zip(params[ok], error[ok]):
            if err > SYMMETRY_TOL:
                violations.append({"property": "odd curve", "param": float(d), "error": float(err)})

    if reflection and abs(cut - math.pi / 2) < 1e-12:
        unstable, div_u = shoot_batch(spec.field, Side.UNSTABLE, params, cut, numerics)
        stable, div_s = shoot_batch(spec.field, Side.STABLE, params, cut, numerics)
        ok = ~div_u & ~div_s
        error = np.maximum(
            np.abs(unstable[:, 0] - stable[:, 0]), np.abs(unstable[:, 1] + stable[:, 1])
        )
        for d, err in zip(params[ok], error[ok]):
            if err > SYMMETRY_TOL:
                violations.append({"property": "reflection", "param": float(d), "error": float(err)})

    if odd:
        records = context.attractor.records
        for record in records:
            if record.d <= 0 or record.eigenvalues is None:
                continue
            partner = min(records, key=lambda r: abs(r.d + record.d))
            if abs(partner.d + record.d) > 1e-6 or partner.eigenvalues is None:
                violations.append({"property": "partner", "label": record.label})
                continue
            n = min(len(record.eigenvalues), len(partner.eigenvalues))
            error = max(
                (abs(x - y) for x, y in zip(record.eigenvalues[:n], partner.eigenvalues[:n])),
                default=0.0,
            )
            if error > SPECTRUM_TOL:
                violations.append(
                    {"property": "spectrum", "labels": [record.label, partner.label], "error": error}
                )

    return CheckResult.from_violations(
        name, violations, {"odd_in_u": odd, "reflection_symmetric": reflection}
    )


def check_dropping(context: VerificationContext) -> CheckResult:
    """``z(u₁ - u₂)`` and ``z(u_t)`` never increase along random trajectories."""
    name = "dropping"
    spec = context.spec
    grid_n = spec.numerics.grid_n
    pairs = context.ensemble(DROPPING_PAIRS)
    rng = context.rng(3)
    initial = [
        (random_initial_condition(rng, grid_n), random_initial_condition(rng, grid_n))
        for _ in range(pairs)
    ]
    dt = min(math.pi / grid_n, DROPPING_T_END / DROPPING_STEPS)

    def run(pair):
        first, second = (simulate(u, spec, DROPPING_T_END, dt) for u in pair)
        found = []
        drops = 0
        for what, track in (
            ("difference", zero_number_track(first, second, spec.numerics.zero_eps)),
            ("time derivative", zero_number_track(first, zero_eps=spec.numerics.zero_eps)),
        ):
            z = np.array([value for _, value in track])
            increases = np.flatnonzero(np.diff(z) > 0)
            drops += int(np.count_nonzero(np.diff(z) < 0))
            found += [
                {"track": what, "t": track[i + 1][0], "z": [int(z[i]), int(z[i + 1])]}
                for i in increases
            ]
        return found, drops

    violations = []
    drops = 0
    blow_ups = 0
    for i, result in enumerate(context.executor.map(_guarded(run), initial)):
        if result is None:
            blow_ups += 1
            violations.append({"pair": i, "problem": "blow-up"})
            continue
        found, dropped = result
        violations += [dict(v, pair=i) for v in found]
        drops += dropped
    return CheckResult.from_violations(
        name,
        violations,
        {"pairs": pairs, "steps": math.ceil(DROPPING_T_END / dt), "strict_drops": drops, "blow_ups": blow_ups},
    )


def check_lyapunov(context: VerificationContext) -> CheckResult:
    """Energy decreases along random trajectories at the rate ``-∫ u_t²/a sin θ dθ``."""
    name = "lyapunov"
    spec = context.spec
    try:
        lyapunov_energy(GridFunction.constant(0.0, spec.numerics.grid_n), spec)
    except UnsupportedEnergyException as ex:
        return _skipped(name, str(ex))

    grid_n = spec.numerics.grid_n
    count = context.ensemble(LYAPUNOV_TRAJECTORIES)
    rng = context.rng(4)
    initial = [random_initial_condition(rng, grid_n) for _ in range(count)]
    dt = 0.1 * math.pi / grid_n

    def run(u0):
        trajectory = simulate(u0, spec, LYAPUNOV_T_END, dt)
        energy = np.array([lyapunov_energy(u, spec) for u in trajectory.snapshots])
        rate = np.array([dissipation_rate(u, spec) for u in trajectory.snapshots])
        increases = np.flatnonzero(
            np.diff(energy) > ENERGY_TOL * (1.0 + np.abs(energy[:-1]))
        )
        discrete = np.diff(energy) / np.diff(trajectory.times)
        midpoint = 0.5 * (rate[1:] + rate[:-1])
        rms = math.sqrt(np.mean((discrete - midpoint) ** 2) / max(np.mean(midpoint**2), 1e-300))
        return increases.tolist(), rms

    violations = []
    worst_rms = 0.0
    for i, result in enumerate(context.executor.map(_guarded(run), initial)):
        if result is None:
            violations.append({"trajectory": i, "problem": "blow-up"})
            continue
        increases, rms = result
        violations += [{"trajectory": i, "step": int(n) + 1} for n in increases]
        worst_rms = max(worst_rms, rms)
        if rms > DISSIPATION_RMS:
            violations.append({"trajectory": i, "dissipation_rms": rms})
    return CheckResult.from_violations(
        name, violations, {"trajectories": count, "dissipation_rms": worst_rms}
    )


def check_wolfrum(context: VerificationContext) -> CheckResult:
    """Adjacency agrees with cascade adjacency on every pair with different indices."""
    name = "wolfrum"
    failure = _need_graph(name, context)
    if failure:
        return failure
    attractor = context.attractor
    result = wolfrum_equivalence(
        attractor.records, attractor.ztable, context.executor, context.spec.numerics.tie_tol
    )
    return CheckResult.from_violations(
        name,
        result["mismatches"],
        {"pairs_considered": result["pairs_considered"], "pairs_compared": result["pairs_compared"]},
        what="mismatches",
    )


def check_heteroclinics(context: VerificationContext) -> CheckResult:
    """Runs from each unstable equilibrium along ``±φ_k`` end at predicted targets."""
    name = "heteroclinics"
    failure = _need_graph(name, context)
    if failure:
        return failure
    attractor = context.attractor
    spec = context.spec
    targets = discrete_targets(attractor.records, spec, context.executor)

    verdicts = []
    violations = []
    for source in attractor.records:
        if not source.morse_index:
            continue
        runs = verify_heteroclinic(
            source, attractor.records, spec, executor=context.executor, targets=targets
        )
        if not runs:
            violations.append({"source": source.label, "problem": "no runs"})
        verdicts += runs

    for verdict in verdicts:
        if verdict.outcome != Outcome.REACHED:
            violations.append(verdict.to_dict())
        elif not attractor.graph.has_edge(verdict.source, verdict.reached):
            violations.append(dict(verdict.to_dict(), problem="unpredicted target"))
    return CheckResult.from_violations(
        name, violations, {"runs": [v.to_dict() for v in verdicts]}
    )


def check_morse(context: VerificationContext) -> CheckResult:
    """
    Angle, eigenvalue and permutation Morse indices agree; Neumann residuals are small and
    the graph is graded.
    """
    name = "morse"
    failure = _need_graph(name, context)
    if failure:
        return failure
    attractor = context.attractor
    numerics = context.spec.numerics
    residual_tol = 10 * numerics.ode_tol + numerics.eps_theta**2

    violations = []
    permutation_indices = attractor.permutation_indices
    if permutation_indices is None:
        violations.append({"problem": "permutation gives no Morse indices"})
    for record in attractor.records:
        entry = {"label": record.label, "angle": record.morse_index}
        if record.eigenvalues is not None:
            entry["eigenvalues"] = sum(1 for x in record.eigenvalues if x > 0)
        if permutation_indices is not None:
            entry["permutation"] = permutation_indices[record.label - 1]
        if len({v for k, v in entry.items() if k != "label"}) > 1:
            violations.append(entry)
        if max(record.neumann_residual) > residual_tol:
            violations.append(
                {"label": record.label, "neumann_residual": list(record.neumann_residual)}
            )
    if not (attractor.graph.is_acyclic() and attractor.graph.is_graded()):
        violations.append({"problem": "graph is not graded-acyclic"})
    return CheckResult.from_violations(name, violations, {"equilibria": len(attractor.records)})


def check_zero_range(context: VerificationContext) -> CheckResult:
    """Every edge ``j → k`` has ``i_k ≤ z(u_j - u_k) < i_j``."""
    name = "zero-range"
    failure = _need_graph(name, context)
    if failure:
        return failure
    attractor = context.attractor
    violations = zero_number_range_violations(attractor.graph, attractor.ztable)
    return CheckResult.from_violations(name, violations, {"edges": len(attractor.graph.edges)})


def check_laplacian(context: VerificationContext) -> CheckResult:
    """Second order convergence of the Laplacian on Legendre modes ``k ≤ 4``."""
    name = "laplacian"
    grid_n = context.spec.numerics.grid_n
    sizes = [grid_n, 2 * grid_n, 4 * grid_n]
    violations = []
    orders = {}
    for k in range(5):
        errors = []
        for n in sizes:
            mode = GridFunction(eval_legendre(k, np.cos(theta_grid(n))))
            errors.append(
                float(np.max(np.abs(laplacian_axisym(mode).values + k * (k + 1) * mode.values)))
            )
        if k == 0:
            if max(errors) > 1e-10:
                violations.append({"k": 0, "errors": errors})
            continue
        observed = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
        orders[k] = observed
        if min(observed) < SPECTRAL_ORDER:
            violations.append({"k": k, "errors": errors, "orders": observed})
    return CheckResult.from_violations(name, violations, {"grids": sizes, "orders": orders})


def _guarded(fn: Callable):
    def run(item):
        try:
            return fn(item)
        except BlowUpException as ex:
            log.warning(f"Trajectory blew up: {ex}")
            return None

    return run


SUITES: dict[str, Callable[[VerificationContext], CheckResult]] = {
    "monotonicity": check_monotonicity,
    "symmetry": check_symmetry,
    "dropping": check_dropping,
    "lyapunov": check_lyapunov,
    "wolfrum": check_wolfrum,
    "heteroclinics": check_heteroclinics,
    "morse": check_morse,
    "zero-range": check_zero_range,
    "laplacian": check_laplacian,
}
"""Suites by name, in the order ``asa verify`` runs them."""

ALIASES = {
    "wolfrum-equivalence": "wolfrum",
}


def resolve_suites(names: list[str] | None) -> list[str]:
    """
    Canonical suite names in run order, without duplicates.

    :param names: Requested names or aliases; every suite if empty or ``None``.
    :raises KeyError: On an unknown suite name.
    """
    if not names:
        return list(SUITES)
    wanted = set()
    for name in names:
        canonical = ALIASES.get(name, name)
        if canonical not in SUITES:
            raise KeyError(name)
        wanted.add(canonical)
    return [name for name in SUITES if name in wanted]


def run_suites(names: list[str] | None, context: VerificationContext) -> list[CheckResult]:
    """
    Run suites; a suite that raises is reported as failed instead of aborting the run.

    :raises KeyError: On an unknown suite name.
    """
    results = []
    for name in resolve_suites(names):
        log.info(f"Running suite '{name}'")
        try:
            result = SUITES[name](context)
        except AsaException as ex:
            log.warning(f"Suite '{name}' failed with {ex.__class__.__name__}: {ex}")
            result = CheckResult(name, CheckStatus.FAILED, f"{ex.__class__.__name__}: {ex}")
        log.info(f"Suite '{name}': {result.status} ({result.message})")
        results.append(result)
    return results
