"""
Method-of-lines simulation of ``u_t = a(θ, u, u_θ) Δu + f(θ, u, u_θ)`` on axisymmetric functions.

The Laplacian is discretised in flux form on control volumes around the grid nodes; the
pole volumes are the polar caps, so no ghost values are needed and the pole rows reduce to
``2u_θθ``. The discrete operator is symmetric in the ``sin θ`` weighted inner product.
"""

import logging
import math
from collections.abc import Callable
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import root
from scipy.special import eval_legendre

from .equilibria import eigen_spectrum, eigenfunction
from .exceptions import AsaException, BlowUpException, UnsupportedEnergyException
from .executor import AbstractExecutor, default_executor
from .helpers import rms_scaled_tolerance
from .model import is_odd_in_u, is_p_independent, is_reflection_symmetric
from .objects.equilibrium import EquilibriumRecord
from .objects.grid import GridFunction, LagrangianTable, Trajectory, mass_weights, theta_grid
from .objects.problem import ProblemSpec
from .objects.report import HeteroclinicVerdict, Outcome
from .permutation import zero_number

log = logging.getLogger(__name__)

EXPLICIT_CFL = 0.4
"""Explicit steps need ``dt ≤ EXPLICIT_CFL·h²/max a``."""

BLOW_UP = 1e6

_QUADRATURE = leggauss(16)


@lru_cache(maxsize=16)
def _laplacian_bands(grid_n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = math.pi / grid_n
    theta = theta_grid(grid_n)
    weights = mass_weights(grid_n)
    faces = np.sin(theta[:-1] + h / 2) / h
    diagonal = -(np.append(faces, 0.0) + np.insert(faces, 0, 0.0)) / weights
    upper = faces / weights[:-1]
    lower = faces / weights[1:]
    for band in (diagonal, upper, lower):
        band.flags.writeable = False
    return diagonal, upper, lower


def _face_weights(grid_n: int) -> np.ndarray:
    h = math.pi / grid_n
    return np.sin(theta_grid(grid_n)[:-1] + h / 2) / h


def _apply_laplacian(values: np.ndarray) -> np.ndarray:
    diagonal, upper, lower = _laplacian_bands(len(values) - 1)
    out = diagonal * values
    out[:-1] += upper * values[1:]
    out[1:] += lower * values[:-1]
    return out


def laplacian_axisym(u: GridFunction) -> GridFunction:
    """
    Axisymmetric Laplace–Beltrami operator ``u_θθ + u_θ cot θ`` with Neumann poles.

    Second order accurate; ``P_k(cos θ)`` is mapped to ``-k(k+1)P_k + O(h²)``.
    """
    return GridFunction(_apply_laplacian(u.values))


def dirichlet_energy(u: GridFunction) -> float:
    """``½∫ u_θ² sin θ dθ`` consistent with :func:`laplacian_axisym`."""
    return 0.5 * float(np.sum(_face_weights(u.grid_n) * np.diff(u.values) ** 2))


def _coefficients(u: np.ndarray, spec: ProblemSpec):
    theta = theta_grid(len(u) - 1)
    du = GridFunction(u).derivative()
    with np.errstate(all="ignore"):
        a = spec.field.a(theta, u, du)
        f = spec.field.f(theta, u, du)
    return a, f


def time_derivative(u: GridFunction, spec: ProblemSpec) -> GridFunction:
    """Right-hand side ``a Δu + f`` of the semi-discrete equation."""
    a, f = _coefficients(u.values, spec)
    return GridFunction(a * _apply_laplacian(u.values) + f)


def explicit_dt_bound(u: GridFunction, spec: ProblemSpec) -> float:
    a, _ = _coefficients(u.values, spec)
    return EXPLICIT_CFL * u.h**2 / float(np.max(a))


def step(
    u: GridFunction,
    spec: ProblemSpec,
    dt: float,
    scheme: str = "imex",
    t: float = 0.0,
) -> GridFunction:
    """
    One time step.

    ``imex`` treats ``a Δu`` implicitly with ``a`` frozen at the old state and the reaction
    explicitly; ``explicit`` is forward Euler.

    :param u: State at time ``t``.
    :param spec: Problem.
    :param dt: Time step.
    :param scheme: ``"imex"`` or ``"explicit"``.
    :param t: Current time, reported on blow-up.
    :raises ValueError: For an unknown scheme or an explicit step above the stability bound.
    :raises BlowUpException: If the new state is not finite or exceeds ``1e6``.
    """
    values = u.values
    a, f = _coefficients(values, spec)
    if scheme == "explicit":
        bound = EXPLICIT_CFL * u.h**2 / float(np.max(a))
        if dt > bound:
            raise ValueError(f"Explicit dt={dt} exceeds the stability bound {bound:.3g}")
        with np.errstate(all="ignore"):
            new = values + dt * (a * _apply_laplacian(values) + f)
    elif scheme == "imex":
        diagonal, upper, lower = _laplacian_bands(u.grid_n)
        bands = np.zeros((3, len(values)))
        bands[0, 1:] = -dt * a[:-1] * upper
        bands[1] = 1.0 - dt * a * diagonal
        bands[2, :-1] = -dt * a[1:] * lower
        with np.errstate(all="ignore"):
            rhs = values + dt * f
        if not np.all(np.isfinite(bands)) or not np.all(np.isfinite(rhs)):
            raise BlowUpException("Non-finite coefficients", t + dt)
        new = solve_banded((1, 1), bands, rhs, check_finite=False)
    else:
        raise ValueError(f"Unknown scheme '{scheme}'")

    if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > BLOW_UP:
        raise BlowUpException("Solution blew up", t + dt)
    return GridFunction(new)


def simulate(
    u0: GridFunction,
    spec: ProblemSpec,
    t_end: float,
    dt: float | None = None,
    scheme: str = "imex",
    record_every: int = 1,
    project: Callable[[GridFunction], GridFunction] | None = None,
) -> Trajectory:
    """
    Integrate from ``u0`` up to ``t_end`` with a fixed step.

    :param dt: Time step; ``h`` for ``imex`` and a quarter of ``h²/max a`` for ``explicit`` if ``None``.
    :param record_every: Keep every n-th step; the initial and final states are always kept.
    :param project: Map applied after every step.
    :raises BlowUpException: If the solution blows up.
    """
    if dt is None:
        dt = u0.h if scheme == "imex" else 0.25 * explicit_dt_bound(u0, spec) / EXPLICIT_CFL
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    log.debug(f"Simulating {steps} {scheme} steps of dt={dt:.3g}")

    u = u0
    t = 0.0
    snapshots = [(0.0, u0)]
    for n in range(1, steps + 1):
        u = step(u, spec, dt, scheme, t)
        if project is not None:
            u = project(u)
        t = n * dt
        if n % record_every == 0 or n == steps:
            snapshots.append((t, u))
    return Trajectory(snapshots, dt, scheme)


def random_initial_condition(
    rng: np.random.Generator, grid_n: int, modes: int = 6, amplitude: float = 1.5
) -> GridFunction:
    """Smooth random profile ``Σ c_k P_k(cos θ)`` with decaying random coefficients."""
    x = np.cos(theta_grid(grid_n))
    coefficients = rng.normal(size=modes) / (1.0 + np.arange(modes))
    values = sum(c * eval_legendre(k, x) for k, c in enumerate(coefficients))
    values = amplitude * values / max(np.max(np.abs(values)), 1e-12)
    return GridFunction(values)


# --- Lyapunov functional ---------------------------------------------------------


def _primitive(spec: ProblemSpec, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``F(θ, u) = ∫₀ᵘ (f/a)(θ, s, 0) ds`` by Gauss–Legendre quadrature."""
    nodes, weights = _QUADRATURE
    s = 0.5 * u[:, None] * (1.0 + nodes[None, :])
    values = spec.field.f_over_a(theta[:, None], s, 0.0 * s)
    return 0.5 * u * np.sum(weights[None, :] * values, axis=1)


def lyapunov_energy(u: GridFunction, spec: ProblemSpec) -> float:
    """
    ``E(u) = ∫ (½u_θ² - F(θ, u)) sin θ dθ`` with ``F`` the ``u``-primitive of ``f/a``.

    :raises UnsupportedEnergyException: If ``f/a`` depends on ``u_θ``.
    """
    if not is_p_independent(spec.field):
        raise UnsupportedEnergyException(
            f"f/a depends on u_theta for {spec!r}; use lagrangian_g"
        )
    potential = _primitive(spec, u.theta, u.values)
    return dirichlet_energy(u) - float(np.sum(u.weights * potential))


def dissipation_rate(u: GridFunction, spec: ProblemSpec) -> float:
    """``dE/dt = -∫ u_t²/a sin θ dθ`` along the semi-discrete flow."""
    a, f = _coefficients(u.values, spec)
    u_t = a * _apply_laplacian(u.values) + f
    return -float(np.sum(u.weights * u_t**2 / a))


def energy_trace(trajectory: Trajectory, spec: ProblemSpec) -> np.ndarray:
    return np.array([lyapunov_energy(u, spec) for u in trajectory.snapshots])


def lagrangian_g(
    spec: ProblemSpec,
    u_values,
    p_values,
    thetas=None,
) -> LagrangianTable:
    """
    Tabulate ``g`` with ``dg/dθ = (f/a)_p`` along the characteristics
    ``u_θ = p``, ``p_θ = -f/a - p cot θ`` started at ``θ = ε_θ`` with ``g = 0``.

    :param u_values: Initial ``u`` values of the lattice.
    :param p_values: Initial ``u_θ`` values of the lattice.
    :param thetas: Increasing tabulation angles in ``[ε_θ, π - ε_θ]``; 65 equidistant angles if ``None``.
    :return: Table over the lattice ``u_values × p_values``; characteristics that blow up are flagged.
    """
    numerics = spec.numerics
    eps = numerics.eps_theta
    guard = numerics.overflow_guard
    field = spec.field
    if thetas is None:
        thetas = np.linspace(eps, math.pi - eps, 65)
    thetas = np.asarray(thetas, dtype=float)

    u0, p0 = np.meshgrid(
        np.asarray(u_values, dtype=float), np.asarray(p_values, dtype=float), indexing="ij"
    )
    u0, p0 = u0.ravel(), p0.ravel()
    m = len(u0)
    poisoned = np.zeros(m, dtype=bool)

    def fun(theta, y):
        u, p = y[:m], y[m : 2 * m]
        with np.errstate(all="ignore"):
            du = p
            dp = -field.f_over_a(theta, u, p) - p / math.tan(theta)
            dg = field.f_over_a_dp(theta, u, p) * np.ones(m)
        bad = ~(np.isfinite(dp) & np.isfinite(dg))
        poisoned[bad] = True
        frozen = bad | ~(np.abs(u) + np.abs(p) <= guard)
        return np.concatenate(
            [np.where(frozen, 0.0, du), np.where(frozen, 0.0, dp), np.where(frozen, 0.0, dg)]
        )

    tol = rms_scaled_tolerance(numerics.ode_tol, 3 * m)
    sol = solve_ivp(
        fun,
        (eps, thetas[-1]),
        np.concatenate([u0, p0, np.zeros(m)]),
        method="DOP853",
        rtol=tol,
        atol=tol,
        t_eval=thetas,
    )
    if sol.status != 0:
        log.warning(f"Characteristic lattice integration stopped early: {sol.message}")
        poisoned[:] = True
        y = np.full((3 * m, len(thetas)), np.nan)
    else:
        y = sol.y
    u, p, g = y[:m], y[m : 2 * m], y[2 * m :]
    flagged = poisoned | ~np.all(np.abs(u) + np.abs(p) <= guard, axis=1)
    if flagged.any():
        log.warning(f"{int(flagged.sum())} of {m} characteristics blew up")
    return LagrangianTable(thetas, u, p, g, flagged)


# --- zero numbers along trajectories ---------------------------------------------


def zero_number_track(
    first: Trajectory, second: Trajectory | None = None, zero_eps: float = 1e-9
) -> list[tuple[float, int]]:
    """
    Zero numbers along trajectories.

    With two trajectories, ``z(u₁(t) - u₂(t))`` per snapshot; with one, ``z(u_t)`` from
    finite differences of consecutive snapshots, stamped at the later time.

    :raises ValueError: If the two trajectories have different time stamps.
    """
    if second is None:
        times = first.times
        snapshots = first.snapshots
        track = []
        for i in range(1, len(snapshots)):
            u_t = (snapshots[i] - snapshots[i - 1]).values / (times[i] - times[i - 1])
            scale = float(np.max(np.abs(u_t))) or 1.0
            track.append((float(times[i]), zero_number(u_t, zero_eps, scale)))
        return track

    if len(first) != len(second) or not np.allclose(first.times, second.times, rtol=0, atol=1e-12):
        raise ValueError("Trajectories must share their time stamps")
    track = []
    for (t, u1), (_, u2) in zip(first, second):
        scale = max(u1.sup_norm, u2.sup_norm) or 1.0
        track.append((t, zero_number(u1 - u2, zero_eps, scale)))
    return track


# --- equilibria of the discretisation and heteroclinic runs ----------------------


def discrete_equilibrium(profile: GridFunction, spec: ProblemSpec) -> GridFunction:
    """
    Newton-polish a profile to a steady state of the semi-discrete equation.

    Falls back to the given profile (with a warning) if Newton doesn't converge.
    """
    n = profile.grid_n
    h = profile.h
    theta = profile.theta
    field = spec.field
    diagonal, upper, lower = _laplacian_bands(n)
    lap = np.diag(diagonal) + np.diag(upper, 1) + np.diag(lower, -1)
    diff = (np.diag(np.full(n, 1.0), 1) - np.diag(np.full(n, 1.0), -1)) / (2.0 * h)
    diff[0, :] = 0.0
    diff[-1, :] = 0.0

    def residual(u):
        du = diff @ u
        return lap @ u + field.f_over_a(theta, u, du) * np.ones_like(u)

    def jacobian(u):
        du = diff @ u
        a = field.a(theta, u, du) * np.ones_like(u)
        f = field.f(theta, u, du) * np.ones_like(u)
        d_u = (field.df_du(theta, u, du) * a - f * field.da_du(theta, u, du)) / a**2
        d_p = field.f_over_a_dp(theta, u, du) * np.ones_like(u)
        return lap + np.diag(d_u * np.ones_like(u)) + d_p[:, None] * diff

    result = root(residual, profile.values, jac=jacobian, method="hybr", options={"xtol": 1e-13})
    norm = float(np.max(np.abs(result.fun)))
    if not norm <= 1e-8:
        log.warning(f"Discrete equilibrium didn't converge (|R|={norm:.3g}), keeping the profile")
        return profile
    log.debug(f"Discrete equilibrium moved by {np.max(np.abs(result.x - profile.values)):.3g}")
    return GridFunction(result.x)


def unstable_directions(
    record: EquilibriumRecord, spec: ProblemSpec
) -> list[GridFunction]:
    """
    L²_w-normalized eigenfunctions ``φ_0 … φ_{i-1}`` of the positive eigenvalues.

    Constant equilibria of θ-independent problems use Legendre modes ``P_k(cos θ)``.
    """
    index = record.morse_index or 0
    if index == 0:
        return []
    grid_n = spec.numerics.grid_n

    if record.is_constant and _theta_independent(spec, record.d):
        x = np.cos(theta_grid(grid_n))
        modes = [GridFunction(eval_legendre(k, x)) for k in range(index)]
        return [phi * (1.0 / phi.norm_w()) for phi in modes]

    eigenvalues = record.eigenvalues
    if eigenvalues is None or len(eigenvalues) < index:
        eigenvalues = eigen_spectrum(record, spec, n_max=index)
    return [eigenfunction(record, spec, eigenvalues[k]) for k in range(index)]


def _theta_independent(spec: ProblemSpec, u: float) -> bool:
    theta = np.linspace(0.1, math.pi - 0.1, 9)
    a, _, b, c = spec.field.linearization(theta, np.full(9, u), np.zeros(9))
    a = np.broadcast_to(a, theta.shape)
    b = np.broadcast_to(b, theta.shape)
    c = np.broadcast_to(c, theta.shape)
    return bool(np.ptp(a) <= 1e-12 and np.ptp(b) <= 1e-12 and np.max(np.abs(c)) <= 1e-12)


def parity_projection(
    u0: GridFunction, spec: ProblemSpec, tol: float = 1e-8
) -> Callable[[GridFunction], GridFunction] | None:
    """
    Projection onto the flow-invariant parity subspace containing ``u0``, if any.

    Even profiles (``u(π - θ) = u(θ)``) are invariant when the problem is reflection
    symmetric, odd profiles when it is also odd in ``u``.
    """
    if not is_reflection_symmetric(spec.field):
        return None
    scale = max(u0.norm_w(), 1e-300)
    if (u0 - u0.reflected()).norm_w() <= tol * scale:
        return lambda u: (u + u.reflected()) * 0.5
    if (u0 + u0.reflected()).norm_w() <= tol * scale and is_odd_in_u(spec.field):
        return lambda u: (u - u.reflected()) * 0.5
    return None


def _nearest(u: GridFunction, targets: dict[int, GridFunction]) -> tuple[int, float]:
    label = min(targets, key=lambda k: u.distance_w(targets[k]))
    return label, u.distance_w(targets[label])


def follow_direction(
    source: EquilibriumRecord,
    direction: GridFunction,
    mode: int,
    sign: int,
    targets: dict[int, GridFunction],
    spec: ProblemSpec,
    amplitude: float = 1e-3,
    t_max: float = 50.0,
    dt: float | None = None,
    expected: int | None = None,
) -> HeteroclinicVerdict:
    """
    Simulate from ``source ± amplitude·φ`` until the state settles near one of ``targets``.

    The run stops once the L²_w distance to the nearest target is below ``conv_tol`` and the
    relative change per unit time is below ``stall_tol``; at ``t_max`` it counts as reached
    if the distance is below ``conv_tol``.

    :param expected: Label the run is meant to reach, recorded in the verdict.
    """
    numerics = spec.numerics
    base = targets.get(source.label, source.profile)
    u = base + direction * (sign * amplitude)
    project = parity_projection(u, spec)
    dt = u.h if dt is None else dt
    per_unit = max(1, round(1.0 / dt))
    steps = math.ceil(t_max / dt - 1e-9)

    previous = u
    label, distance = _nearest(u, targets)
    t = 0.0
    try:
        for n in range(1, steps + 1):
            u = step(u, spec, dt, "imex", t)
            if project is not None:
                u = project(u)
            t = n * dt
            if n % per_unit and n != steps:
                continue
            label, distance = _nearest(u, targets)
            change = u.distance_w(previous) / (per_unit * dt) / max(1.0, u.norm_w())
            previous = u
            if label != source.label and distance < numerics.conv_tol and change < numerics.stall_tol:
                break
    except BlowUpException as ex:
        log.warning(f"Run from {source.label} along {sign:+d}phi_{mode} blew up at t={ex.time}")
        return HeteroclinicVerdict(
            source.label, mode, sign, Outcome.DIVERGED, time=ex.time, expected=expected
        )

    if distance < numerics.conv_tol and label != source.label:
        outcome = Outcome.REACHED
    else:
        outcome = Outcome.TIMEOUT
        label = None
        log.info(
            f"Run from {source.label} along {sign:+d}phi_{mode} did not settle by t={t:g} "
            f"(distance {distance:.3g})"
        )
    verdict = HeteroclinicVerdict(source.label, mode, sign, outcome, label, t, distance, expected)
    if verdict.reached_expected is False:
        log.info(f"Run from {source.label} along {sign:+d}phi_{mode} ended at {label}, not {expected}")
    return verdict


def discrete_targets(
    records: list[EquilibriumRecord],
    spec: ProblemSpec,
    executor: AbstractExecutor | None = None,
) -> dict[int, GridFunction]:
    """Discrete steady states for every equilibrium, keyed by label."""
    executor = default_executor(executor)
    profiles = executor.map(lambda r: discrete_equilibrium(r.profile, spec), records)
    return {r.label: profile for r, profile in zip(records, profiles)}


def verify_heteroclinic(
    source: EquilibriumRecord,
    records: list[EquilibriumRecord],
    spec: ProblemSpec,
    to: EquilibriumRecord | None = None,
    amplitude: float = 1e-3,
    t_max: float = 50.0,
    executor: AbstractExecutor | None = None,
    targets: dict[int, GridFunction] | None = None,
) -> list[HeteroclinicVerdict]:
    """
    Follow every unstable direction ``±φ_k``, ``k < i(source)``, of an equilibrium.

    With ``to`` every verdict records it as the expected target, and
    ``to.label in reached_targets(verdicts)`` tells whether some direction got there.

    :param source: Equilibrium to perturb.
    :param records: All equilibria, the candidate targets.
    :param to: Equilibrium the connection should reach.
    :param amplitude: Perturbation size in L²_w.
    :param t_max: Time limit of each run.
    :param targets: Precomputed :func:`discrete_targets`.
    :return: Verdicts ordered by mode then sign (``+`` first); empty for a stable
        equilibrium, a single :attr:`Outcome.FAILED` verdict if the directions couldn't be
        computed.
    """
    executor = default_executor(executor)
    expected = to.label if to is not None else None
    try:
        directions = unstable_directions(source, spec)
    except AsaException as ex:
        log.warning(f"No unstable directions for equilibrium {source.label}: {ex}")
        return [HeteroclinicVerdict(source.label, None, 0, Outcome.FAILED, expected=expected)]
    if not directions:
        return []
    if targets is None:
        targets = discrete_targets(records, spec, executor)

    runs = [(k, sign) for k in range(len(directions)) for sign in (1, -1)]
    return executor.map(
        lambda run: follow_direction(
            source,
            directions[run[0]],
            run[0],
            run[1],
            targets,
            spec,
            amplitude,
            t_max,
            expected=expected,
        ),
        runs,
    )


def reached_targets(verdicts: list[HeteroclinicVerdict]) -> set[int]:
    return {v.reached for v in verdicts if v.outcome == Outcome.REACHED}
