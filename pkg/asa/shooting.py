"""
Singular shooting for equilibria.

Equilibria solve ``a(θ, u, u_θ)(u_θθ + u_θ cot θ) + f(θ, u, u_θ) = 0`` with regular poles.
In the chart ``τ = ln tan(θ/2)`` the poles become the hyperbolic points ``τ = ∓∞`` of

    u_τ = p,    p_τ = -(f/a)·sin²θ,    θ_τ = sin θ,

where ``f`` and ``a`` are evaluated at ``(θ, u, p/sin θ)``. Trajectories leaving the north
pole with ``u(0) = d`` form the unstable manifold, those reaching the south pole with
``u(π) = e`` the stable one. Integration runs in θ between ``ε_θ`` and ``π - ε_θ``, started
from a second order series at the poles.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import (
    EmptyCurveException,
    NumericException,
    ParabolicityException,
    ProblemConfigException,
    ShootingDivergenceException,
    ThetaDomainException,
)
from .executor import AbstractExecutor, default_executor
from .helpers import chunked, rms_scaled_tolerance
from .objects.curve import SampledCurve, ShootState, Side, TangentState
from .objects.problem import CoefficientField, Numerics, ProblemSpec

log = logging.getLogger(__name__)

METHOD = "DOP853"
"""Embedded Runge–Kutta pair of order 8(5,3) with dense output."""

BATCH_SIZE = 64
"""Shots integrated together as one vectorized system."""

MIN_CROSS_SECTION_SAMPLES = 64

TANGENT_COLLAPSE = 1e-12


def tau_of_theta(theta):
    """
    ``τ = ln tan(θ/2)``.

    :param theta: Angle(s) in ``(0, π)``.
    :raises ThetaDomainException: If any angle is outside ``(0, π)``.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if not np.all((theta_arr > 0.0) & (theta_arr < math.pi)):
        raise ThetaDomainException(f"theta={theta} is outside (0, pi)")
    tau = np.log(np.tan(theta_arr / 2.0))
    return float(tau) if tau.ndim == 0 else tau


def theta_of_tau(tau):
    """Inverse of :func:`tau_of_theta`, ``θ = 2 atan(e^τ)``."""
    theta = 2.0 * np.arctan(np.exp(np.asarray(tau, dtype=float)))
    return float(theta) if theta.ndim == 0 else theta


def rhs(state: ShootState, field: CoefficientField) -> tuple[float, float, float]:
    """
    Right-hand side ``(u_τ, p_τ, θ_τ)`` of the shooting system.

    :raises NumericException: If the coefficients evaluate to a non-finite value or ``a ≤ 0``.
    """
    s = math.sin(state.theta)
    u_theta = state.p / s
    a = field.a(state.theta, state.u, u_theta)
    f = field.f(state.theta, state.u, u_theta)
    if not (math.isfinite(a) and math.isfinite(f)) or a <= 0:
        raise NumericException(
            f"Coefficients a={a}, f={f} are not usable at {state}", state=state
        )
    return state.p, -(f / a) * s * s, s


def _pole(side: Side) -> float:
    return 0.0 if side == Side.UNSTABLE else math.pi


def _series_start(
    field: CoefficientField,
    side: Side,
    params,
    eps_theta: float,
    min_diffusion: float,
):
    params = np.asarray(params, dtype=float)
    pole = _pole(side)
    with np.errstate(all="ignore"):
        a0 = field.a(pole, params, 0.0 * params)
        f0 = field.f(pole, params, 0.0 * params)
    too_small = ~(np.atleast_1d(np.broadcast_to(a0, params.shape)) >= min_diffusion)
    if too_small.any():
        bad = np.atleast_1d(params)[np.flatnonzero(too_small)[0]]
        raise ParabolicityException(
            f"Diffusion coefficient below {min_diffusion:g} at the {side} pole for parameter {bad}"
        )
    if not np.all(np.isfinite(f0)):
        raise NumericException(f"Non-finite reaction term at the {side} pole", state=params)

    ratio = f0 / a0
    u = params - ratio / 4.0 * eps_theta**2
    # u_θ = ∓(f₀/2a₀)·(distance to the pole)
    u_theta = -ratio / 2.0 * eps_theta
    if side == Side.STABLE:
        u_theta = -u_theta
    p = u_theta * math.sin(eps_theta)
    theta0 = eps_theta if side == Side.UNSTABLE else math.pi - eps_theta
    return theta0, u, p


def init_unstable(
    field: CoefficientField, d: float, eps_theta: float, min_diffusion: float = 1e-8
) -> ShootState:
    """
    Series start of the unstable trajectory with ``u(0) = d`` at ``θ = ε_θ``.

    With ``a₀ = a(0, d, 0)``, ``f₀ = f(0, d, 0)``: ``u = d - f₀ε²/(4a₀)`` and
    ``p = -(f₀ε/(2a₀))·sin ε``.

    :raises ParabolicityException: If ``a₀`` is below ``min_diffusion``.
    """
    theta0, u, p = _series_start(field, Side.UNSTABLE, d, eps_theta, min_diffusion)
    return ShootState(theta0, u, p)


def init_stable(
    field: CoefficientField, e: float, eps_theta: float, min_diffusion: float = 1e-8
) -> ShootState:
    """Series start of the stable trajectory with ``u(π) = e`` at ``θ = π - ε_θ``."""
    theta0, u, p = _series_start(field, Side.STABLE, e, eps_theta, min_diffusion)
    return ShootState(theta0, u, p)


def init_state(field: CoefficientField, side: Side, param: float, numerics: Numerics) -> ShootState:
    if side == Side.UNSTABLE:
        return init_unstable(field, param, numerics.eps_theta, numerics.min_diffusion)
    return init_stable(field, param, numerics.eps_theta, numerics.min_diffusion)


def _theta_chart(field: CoefficientField):
    def fun(theta, y):
        u, p = y
        s = math.sin(theta)
        g = field.f_over_a(theta, u, p / s)
        if not math.isfinite(g):
            raise NumericException(
                f"Non-finite f/a at theta={theta}, u={u}, p={p}", state=(theta, u, p)
            )
        return [p / s, -g * s]

    return fun


def _integrate(
    field: CoefficientField,
    state: ShootState,
    theta_target: float,
    tol: float,
    overflow_guard: float,
    dense_output: bool = False,
):
    if not 0.0 < theta_target < math.pi:
        raise ThetaDomainException(f"theta_target={theta_target} is outside (0, pi)")

    def escaped(theta, y):
        return abs(y[0]) + abs(y[1]) - overflow_guard

    escaped.terminal = True

    try:
        sol = solve_ivp(
            _theta_chart(field),
            (state.theta, theta_target),
            [state.u, state.p],
            method=METHOD,
            rtol=tol,
            atol=tol,
            events=escaped,
            dense_output=dense_output,
        )
    except NumericException as ex:
        theta, u, p = ex.state
        raise ShootingDivergenceException(str(ex), state=ShootState(theta, u, p))

    last = ShootState(sol.t[-1], sol.y[0, -1], sol.y[1, -1]) if len(sol.t) else state
    if sol.status == 1:
        raise ShootingDivergenceException(
            f"Trajectory from {state} exceeded |u|+|p| = {overflow_guard:g} at theta={last.theta}",
            state=last,
        )
    if sol.status != 0:
        raise ShootingDivergenceException(
            f"Integration from {state} failed: {sol.message}", state=last
        )
    return sol


def integrate_to(
    field: CoefficientField,
    state: ShootState,
    theta_target: float,
    tol: float,
    overflow_guard: float = 1e6,
) -> ShootState:
    """
    Integrate the shooting system in θ, forward or backward.

    :param field: Coefficients.
    :param state: Start state.
    :param theta_target: Final angle, reached exactly.
    :param tol: Absolute and relative local error tolerance.
    :param overflow_guard: Bound on ``|u| + |p|``.
    :raises ShootingDivergenceException: If the trajectory escapes the guard or the step size underflows;
        the last accepted state is attached.
    :return: State at ``theta_target``.
    """
    if theta_target == state.theta:
        return state
    sol = _integrate(field, state, theta_target, tol, overflow_guard)
    return ShootState(theta_target, sol.y[0, -1], sol.y[1, -1])


def shoot(
    field: CoefficientField,
    side: Side,
    param: float,
    theta_target: float,
    numerics: Numerics,
    dense_output: bool = False,
):
    """
    Shoot from a pole to ``theta_target``.

    :return: Tuple of the final state and the SciPy solution (with ``sol`` if ``dense_output``).
    """
    start = init_state(field, side, param, numerics)
    sol = _integrate(
        field, start, theta_target, numerics.ode_tol, numerics.overflow_guard, dense_output
    )
    return ShootState(theta_target, sol.y[0, -1], sol.y[1, -1]), sol


def _single_shot(
    field: CoefficientField,
    side: Side,
    param: float,
    theta_cut: float,
    numerics: Numerics,
) -> tuple[np.ndarray, bool]:
    try:
        state, _ = shoot(field, side, param, theta_cut, numerics)
    except ShootingDivergenceException as ex:
        log.debug(f"Shot {side} {param} diverged: {ex}")
        return np.full(2, np.nan), True
    return np.array([state.u, state.p]), False


def shoot_batch(
    field: CoefficientField,
    side: Side,
    params: Sequence[float],
    theta_cut: float,
    numerics: Numerics,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Shoot a batch of parameters as one vectorized system.

    Components whose derivative turns non-finite or that leave the overflow guard in any
    stage are frozen and later shot again on their own with :func:`shoot`, so a member
    diverges exactly when its single shot does. If the integrator fails for the batch, it
    is split and retried down to single shots.

    :return: ``(points, diverged)``: ``(m, 2)`` array of ``(u, p)`` at the cut and a boolean mask.
    """
    params = np.asarray(params, dtype=float)
    m = len(params)
    if m == 0:
        return np.zeros((0, 2)), np.zeros(0, dtype=bool)
    if m == 1:
        point, diverged = _single_shot(field, side, params[0], theta_cut, numerics)
        return point.reshape(1, 2), np.array([diverged])

    theta0, u0, p0 = _series_start(
        field, side, params, numerics.eps_theta, numerics.min_diffusion
    )
    guard = numerics.overflow_guard
    frozen_once = np.zeros(m, dtype=bool)

    def fun(theta, y):
        u = y[:m]
        p = y[m:]
        s = math.sin(theta)
        with np.errstate(all="ignore"):
            g = field.f_over_a(theta, u, p / s)
            du = p / s
            dp = -g * s
        frozen = ~(np.isfinite(du) & np.isfinite(dp)) | ~(np.abs(u) + np.abs(p) <= guard)
        if frozen.any():
            frozen_once[frozen] = True
            du = np.where(frozen, 0.0, du)
            dp = np.where(frozen, 0.0, dp)
        return np.concatenate([du, dp])

    tol = rms_scaled_tolerance(numerics.ode_tol, 2 * m)
    sol = solve_ivp(
        fun,
        (theta0, theta_cut),
        np.concatenate([u0, p0]),
        method=METHOD,
        rtol=tol,
        atol=tol,
    )

    if sol.status != 0:
        log.debug(f"Batch of {m} {side} shots failed ({sol.message}), splitting")
        half = m // 2
        left = shoot_batch(field, side, params[:half], theta_cut, numerics)
        right = shoot_batch(field, side, params[half:], theta_cut, numerics)
        return np.vstack([left[0], right[0]]), np.concatenate([left[1], right[1]])

    points = np.column_stack([sol.y[:m, -1], sol.y[m:, -1]])
    diverged = np.zeros(m, dtype=bool)
    retry = np.flatnonzero(frozen_once | ~np.all(np.isfinite(points), axis=1))
    if len(retry):
        log.debug(f"Shooting {len(retry)} of {m} {side} members again on their own")
    for i in retry:
        points[i], diverged[i] = _single_shot(field, side, params[i], theta_cut, numerics)
    return points, diverged


def _shoot_many(
    field: CoefficientField,
    side: Side,
    params: np.ndarray,
    theta_cut: float,
    numerics: Numerics,
    executor: AbstractExecutor,
) -> tuple[np.ndarray, np.ndarray]:
    batches = chunked(params, BATCH_SIZE)
    results = executor.map(
        lambda batch: shoot_batch(field, side, batch, theta_cut, numerics), batches
    )
    points = np.vstack([r[0] for r in results])
    diverged = np.concatenate([r[1] for r in results])
    return points, diverged


def _refinement_params(
    params: np.ndarray, points: np.ndarray, diverged: np.ndarray, numerics: Numerics
) -> np.ndarray:
    ok = ~diverged[:-1] & ~diverged[1:]
    with np.errstate(invalid="ignore"):
        gap = np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))
        inside = np.max(np.abs(points), axis=1) <= numerics.refine_box
    in_box = inside[:-1] | inside[1:]
    wide = np.diff(params) > 2.0 * numerics.min_param_step
    refine = ok & in_box & wide & (gap > numerics.refine_gap)
    i = np.flatnonzero(refine)
    return 0.5 * (params[i] + params[i + 1])


def cross_section(
    spec: ProblemSpec,
    side: Side,
    theta_cut: float | None = None,
    param_range: tuple[float, float] | None = None,
    n: int | None = None,
    executor: AbstractExecutor | None = None,
) -> SampledCurve:
    """
    Sample the cross-section of a shooting manifold at ``theta_cut``.

    Starts from ``n`` equidistant parameters and bisects intervals whose points are farther
    apart than ``refine_gap`` near the origin, so that strongly stretched parts of the curve
    stay resolved.

    :param spec: Problem.
    :param side: Which manifold.
    :param theta_cut: Cross-section angle; ``numerics.theta_cut`` if ``None``.
    :param param_range: Parameter interval; ``numerics.d_range`` / ``e_range`` if ``None``.
    :param n: Initial sample count (at least 64); ``numerics.samples`` if ``None``.
    :param executor: Executor for the batches of shots.
    :raises EmptyCurveException: If every shot diverged.
    :return: Sampled curve in parameter order.
    """
    numerics = spec.numerics
    field = spec.field
    executor = default_executor(executor)
    theta_cut = numerics.theta_cut if theta_cut is None else theta_cut
    if param_range is None:
        param_range = numerics.d_range if side == Side.UNSTABLE else numerics.e_range
    n = numerics.samples if n is None else n
    if n < MIN_CROSS_SECTION_SAMPLES:
        raise ProblemConfigException(
            f"Cross-section needs at least {MIN_CROSS_SECTION_SAMPLES} samples, got {n}"
        )
    if not 0.0 < theta_cut < math.pi:
        raise ThetaDomainException(f"theta_cut={theta_cut} is outside (0, pi)")

    log.info(f"Sampling {side} cross-section at θ={theta_cut:.6g} with {n} shots")

    params = np.linspace(param_range[0], param_range[1], n)
    points, diverged = _shoot_many(field, side, params, theta_cut, numerics, executor)

    rounds = 0
    while True:
        new = _refinement_params(params, points, diverged, numerics)
        if len(new) == 0:
            break
        remaining = numerics.max_samples - len(params)
        if remaining <= 0:
            log.warning(
                f"Stopped refining the {side} curve at {len(params)} samples (max_samples)"
            )
            break
        new = new[:remaining]
        new_points, new_diverged = _shoot_many(
            field, side, new, theta_cut, numerics, executor
        )
        params = np.concatenate([params, new])
        points = np.vstack([points, new_points])
        diverged = np.concatenate([diverged, new_diverged])
        order = np.argsort(params, kind="stable")
        params, points, diverged = params[order], points[order], diverged[order]
        rounds += 1

    log.debug(f"{side} curve: {len(params)} samples after {rounds} refinement rounds")

    if diverged.all():
        raise EmptyCurveException(
            f"All {len(params)} {side} shots in [{param_range[0]}, {param_range[1]}] diverged"
        )
    if diverged.any():
        log.warning(f"{int(diverged.sum())} of {len(params)} {side} shots diverged")

    return SampledCurve(
        side=side,
        cut_theta=theta_cut,
        params=params[~diverged],
        points=points[~diverged],
        diverged_params=params[diverged],
    )


# --- tangent / eigenvalue system ----------------------------------------------


@dataclass(frozen=True)
class VariationalShot:
    """Result of shooting the equilibrium together with linearized solutions."""

    state: ShootState
    u_d: np.ndarray
    p_d: np.ndarray
    nu: np.ndarray
    solution: object


def _variational_start(
    field: CoefficientField,
    side: Side,
    param: float,
    spectral: np.ndarray,
    numerics: Numerics,
):
    theta0, u0, p0 = _series_start(
        field, side, param, numerics.eps_theta, numerics.min_diffusion
    )
    a0, _, b0, _ = field.linearization(_pole(side), float(param), 0.0)
    eps = numerics.eps_theta
    # v = 1 + cθ² solves a₀Δv = -(b₀ - Λ)v at the pole to second order
    c = -(b0 - spectral) / (4.0 * a0)
    u_d = 1.0 + c * eps**2
    p_d = 2.0 * c * eps * math.sin(eps)
    if side == Side.STABLE:
        p_d = -p_d
    nu = np.arctan2(-p_d, u_d)
    return theta0, float(u0), float(p0), u_d, p_d, nu


def shoot_variational(
    field: CoefficientField,
    side: Side,
    param: float,
    theta_target: float,
    numerics: Numerics,
    spectral: Sequence[float] = (0.0,),
    tol: float | None = None,
    t_eval: np.ndarray | None = None,
    dense_output: bool = False,
) -> VariationalShot:
    """
    Shoot an equilibrium trajectory together with solutions ``v`` of
    ``a Δv + b v + c v_θ = Λ v`` for several spectral values ``Λ`` at once.

    ``(u_d, p_d) = (v, sin θ · v_θ)``; for ``Λ = 0`` this is the tangent of the shooting
    curve with respect to its parameter. ``ν = atan2(-p_d, u_d)`` is integrated as part of
    the system, so it is unwrapped.

    If ``t_eval`` is given it must end with ``theta_target``.

    :raises ShootingDivergenceException: If the integration fails.
    :raises NumericException: If a tangent vector collapses to zero.
    """
    spectral = np.asarray(spectral, dtype=float)
    m = len(spectral)
    theta0, u0, p0, ud0, pd0, nu0 = _variational_start(
        field, side, param, spectral, numerics
    )

    def fun(theta, y):
        u, p = y[0], y[1]
        ud = y[2 : 2 + m]
        pd = y[2 + m : 2 + 2 * m]
        s = math.sin(theta)
        w = p / s
        a, delta, b, c = field.linearization(theta, u, w)
        dud = pd / s
        dpd = -(s * (b - spectral) * ud + c * pd) / a
        dnu = (-ud * dpd + pd * dud) / (ud * ud + pd * pd)
        return np.concatenate(([w, delta * s], dud, dpd, dnu))

    size = 2 + 3 * m
    tol = rms_scaled_tolerance(tol if tol is not None else numerics.ode_tol, size)
    with np.errstate(all="ignore"):
        sol = solve_ivp(
            fun,
            (theta0, theta_target),
            np.concatenate(([u0, p0], ud0, pd0, nu0)),
            method=METHOD,
            rtol=tol,
            atol=tol,
            t_eval=t_eval,
            dense_output=dense_output,
        )
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise ShootingDivergenceException(
            f"Variational shot {side} {param} failed: {sol.message}",
            state=ShootState(sol.t[-1], sol.y[0, -1], sol.y[1, -1]) if len(sol.t) else None,
        )

    final = sol.y[:, -1]
    u_d = final[2 : 2 + m]
    p_d = final[2 + m : 2 + 2 * m]
    if np.any(np.hypot(u_d, p_d) < TANGENT_COLLAPSE):
        raise NumericException(
            f"Tangent vector collapsed on the {side} side at parameter {param}",
            state=(theta_target, final[0], final[1]),
        )
    return VariationalShot(
        state=ShootState(theta_target, final[0], final[1]),
        u_d=u_d,
        p_d=p_d,
        nu=final[2 + 2 * m :],
        solution=sol,
    )


def shoot_with_tangent(
    field: CoefficientField,
    side: Side,
    param: float,
    theta_target: float,
    numerics: Numerics,
) -> tuple[ShootState, TangentState]:
    """
    Shoot and return the tangent of the shooting curve with respect to its parameter.
    """
    shot = shoot_variational(field, side, param, theta_target, numerics)
    return shot.state, TangentState(shot.u_d[0], shot.p_d[0], shot.nu[0])


# --- polar coordinates -------------------------------------------------------------


def polar_trajectories(
    field: CoefficientField,
    params: Sequence[float],
    taus: Sequence[float],
    numerics: Numerics,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Unwrapped clockwise angle ``μ = atan2(-p, u)`` and radius ``ρ = |(u, p)|`` of unstable
    trajectories on a τ-grid.

    :param field: Coefficients.
    :param params: Values ``d`` at the north pole; trajectories must avoid the origin.
    :param taus: Increasing τ values inside ``(τ(ε_θ), τ(π - ε_θ))``.
    :return: ``(mu, rho)``, each of shape ``(len(params), len(taus))``.
    """
    params = np.asarray(params, dtype=float)
    thetas = theta_of_tau(np.asarray(taus, dtype=float))
    thetas = np.atleast_1d(thetas)
    eps = numerics.eps_theta
    if np.any(np.diff(thetas) <= 0) or thetas[0] < eps or thetas[-1] > math.pi - eps:
        raise ThetaDomainException(
            f"tau grid must be increasing inside the shooting interval, got {list(taus)}"
        )
    m = len(params)
    theta0, u0, p0 = _series_start(field, Side.UNSTABLE, params, eps, numerics.min_diffusion)

    def fun(theta, y):
        u = y[:m]
        p = y[m : 2 * m]
        s = math.sin(theta)
        du = p / s
        dp = -field.f_over_a(theta, u, du) * s
        dmu = (-u * dp + p * du) / (u * u + p * p)
        return np.concatenate([du, dp, dmu])

    tol = rms_scaled_tolerance(numerics.ode_tol, 3 * m)
    sol = solve_ivp(
        fun,
        (theta0, thetas[-1]),
        np.concatenate([u0, p0, np.arctan2(-p0, u0)]),
        method=METHOD,
        rtol=tol,
        atol=tol,
        t_eval=thetas,
    )
    if sol.status != 0:
        raise ShootingDivergenceException(f"Polar trajectories failed: {sol.message}")
    u = sol.y[:m]
    p = sol.y[m : 2 * m]
    return sol.y[2 * m :], np.hypot(u, p)


def polar_trajectory(
    field: CoefficientField, d: float, taus: Sequence[float], numerics: Numerics
) -> tuple[np.ndarray, np.ndarray]:
    """Single-trajectory form of :func:`polar_trajectories`."""
    mu, rho = polar_trajectories(field, [d], taus, numerics)
    return mu[0], rho[0]
