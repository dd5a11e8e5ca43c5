"""
Equilibria as intersections of the shooting curves, their profiles, Morse indices and spectra.
"""

import logging
import math

import numpy as np
from scipy.optimize import brentq, root

from .exceptions import AsaException, NonHyperbolicException, ProfileMismatchException
from .executor import AbstractExecutor, default_executor
from .objects.curve import SampledCurve, Side
from .objects.equilibrium import EquilibriumRecord
from .objects.grid import GridFunction, theta_grid
from .objects.problem import ProblemSpec
from .shooting import (
    cross_section,
    init_state,
    shoot,
    shoot_variational,
    shoot_with_tangent,
)

log = logging.getLogger(__name__)

_CHUNK = 256
"""Rows of the pairwise segment tests evaluated at once."""

MAX_CANDIDATES = 400

EIGEN_GRID = 65
"""Spectral values sampled before bracketing eigenvalues."""


# --- intersections -----------------------------------------------------------------


def _segments(curve: SampledCurve, box: float):
    points = curve.points
    params = curve.params
    i = np.flatnonzero(~curve.breaks)
    start, end = points[i], points[i + 1]
    lower = np.minimum(start, end)
    upper = np.maximum(start, end)
    keep = np.all(lower <= box, axis=1) & np.all(upper >= -box, axis=1)
    i = i[keep]
    return points[i], points[i + 1], params[i], params[i + 1]


def _cross(x, y):
    return x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]


def _crossing_seeds(seg_u, seg_s) -> list[tuple[float, float]]:
    a_u, b_u, d0, d1 = seg_u
    a_s, b_s, e0, e1 = seg_s
    seeds = []
    r_s = b_s - a_s
    for start in range(0, len(a_u), _CHUNK):
        a = a_u[start : start + _CHUNK, None, :]
        r = b_u[start : start + _CHUNK, None, :] - a
        q = a_s[None, :, :] - a
        denom = _cross(r, r_s[None, :, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross(q, r_s[None, :, :]) / denom
            w = _cross(q, r) / denom
        hit = (denom != 0) & (t >= 0) & (t <= 1) & (w >= 0) & (w <= 1)
        for i, j in zip(*np.nonzero(hit)):
            k = start + i
            seeds.append(
                (
                    float(d0[k] + t[i, j] * (d1[k] - d0[k])),
                    float(e0[j] + w[i, j] * (e1[j] - e0[j])),
                )
            )
    return seeds


def _nearest_on_segments(vertices, segments):
    """Distance from each vertex to the closest segment and the parameter of the foot point."""
    a, b, t0, t1 = segments
    r = b - a
    length2 = np.maximum(np.sum(r * r, axis=1), 1e-300)
    distance = np.empty(len(vertices))
    param = np.empty(len(vertices))
    for start in range(0, len(vertices), _CHUNK):
        v = vertices[start : start + _CHUNK, None, :]
        s = np.clip(np.sum((v - a[None]) * r[None], axis=2) / length2[None], 0.0, 1.0)
        foot = a[None] + s[..., None] * r[None]
        dist = np.hypot(*(v - foot).transpose(2, 0, 1))
        j = np.argmin(dist, axis=1)
        rows = np.arange(len(j))
        distance[start : start + _CHUNK] = dist[rows, j]
        param[start : start + _CHUNK] = t0[j] + s[rows, j] * (t1[j] - t0[j])
    return distance, param


def _near_miss_seeds(
    curve: SampledCurve, other_segments, near_tol: float, box: float
) -> list[tuple[float, float]]:
    if len(other_segments[0]) == 0 or len(curve) < 3:
        return []
    inside = np.max(np.abs(curve.points), axis=1) <= box
    idx = np.flatnonzero(inside)
    if len(idx) < 3:
        return []
    distance = np.full(len(curve), np.inf)
    foot = np.full(len(curve), np.nan)
    distance[idx], foot[idx] = _nearest_on_segments(curve.points[idx], other_segments)

    breaks = np.concatenate([[True], curve.breaks, [True]])
    seeds = []
    for i in idx:
        if distance[i] >= near_tol:
            continue
        left = distance[i - 1] if not breaks[i] else np.inf
        right = distance[i + 1] if not breaks[i + 1] else np.inf
        if distance[i] <= left and distance[i] <= right:
            seeds.append((float(curve.params[i]), float(foot[i])))
    return seeds


def _refine_root(seed: tuple[float, float], spec: ProblemSpec):
    numerics = spec.numerics
    field = spec.field
    cut = numerics.theta_cut

    def mismatch(x):
        state_u, tangent_u = shoot_with_tangent(field, Side.UNSTABLE, x[0], cut, numerics)
        state_s, tangent_s = shoot_with_tangent(field, Side.STABLE, x[1], cut, numerics)
        value = [state_u.u - state_s.u, state_u.p - state_s.p]
        jacobian = [[tangent_u.u_d, -tangent_s.u_d], [tangent_u.p_d, -tangent_s.p_d]]
        return value, jacobian

    try:
        result = root(
            mismatch,
            np.asarray(seed, dtype=float),
            jac=True,
            method="hybr",
            options={"maxfev": numerics.max_iter, "xtol": 1e-13},
        )
    except AsaException as ex:
        log.warning(f"Demoting candidate {seed}: {ex}")
        return None

    residual = float(np.max(np.abs(result.fun)))
    if not residual <= numerics.root_tol:
        log.warning(
            f"Demoting candidate {seed}: Newton stopped at {tuple(result.x)} with |F|={residual:.3g} "
            f"({result.message})"
        )
        return None

    d, e = (float(x) for x in result.x)
    slack = numerics.merge_tol
    if not (
        numerics.d_min - slack <= d <= numerics.d_max + slack
        and numerics.e_min - slack <= e <= numerics.e_max + slack
    ):
        log.debug(f"Root ({d}, {e}) from seed {seed} is outside the parameter ranges")
        return None
    log.debug(f"Candidate {seed} converged to ({d}, {e}), |F|={residual:.3g}")
    return d, e


def merge_roots(roots: list[tuple[float, float]], merge_tol: float) -> list[tuple[float, float]]:
    """Drop roots within ``merge_tol`` of an earlier one in both coordinates; sort by ``d``."""
    merged = []
    for d, e in sorted(roots):
        if any(abs(d - d2) <= merge_tol and abs(e - e2) <= merge_tol for d2, e2 in merged):
            continue
        merged.append((d, e))
    return merged


def find_intersections(
    curve_u: SampledCurve,
    curve_s: SampledCurve,
    spec: ProblemSpec,
    executor: AbstractExecutor | None = None,
) -> list[tuple[float, float]]:
    """
    Intersections of the unstable and stable cross-sections.

    Candidates come from crossings of the sampled polygons and from vertices whose
    distance to the other curve has a local minimum below ``near_tol``. Each candidate is
    refined by Newton's method on ``F(d, e) = (u^u(d) - u^s(e), p^u(d) - p^s(e))`` with the
    Jacobian from the tangent system; candidates not reaching ``|F| ≤ root_tol`` are
    demoted with a warning.

    :param curve_u: Unstable cross-section.
    :param curve_s: Stable cross-section at the same angle.
    :param spec: Problem.
    :param executor: Executor for the Newton refinements.
    :return: Roots ``(d, e)`` sorted by ``d``; empty if the curves don't meet.
    """
    if not math.isclose(curve_u.cut_theta, curve_s.cut_theta, rel_tol=0, abs_tol=1e-15):
        raise ValueError(
            f"Curves are cut at different angles {curve_u.cut_theta} and {curve_s.cut_theta}"
        )
    numerics = spec.numerics
    if spec.numerics.theta_cut != curve_u.cut_theta:
        spec = spec.with_numerics(theta_cut=curve_u.cut_theta)
        numerics = spec.numerics
    executor = default_executor(executor)
    box = numerics.refine_box

    seg_u = _segments(curve_u, box)
    seg_s = _segments(curve_s, box)
    seeds = _crossing_seeds(seg_u, seg_s)
    crossings = len(seeds)
    seeds += _near_miss_seeds(curve_u, seg_s, numerics.near_tol, box)
    seeds += [
        (d, e)
        for e, d in _near_miss_seeds(curve_s, seg_u, numerics.near_tol, box)
    ]
    seeds = merge_roots(seeds, numerics.merge_tol)
    if len(seeds) > MAX_CANDIDATES:
        log.warning(
            f"{len(seeds)} intersection candidates, refining only the first {MAX_CANDIDATES}"
        )
        seeds = seeds[:MAX_CANDIDATES]

    refined = executor.map(lambda seed: _refine_root(seed, spec), seeds)
    roots = merge_roots([r for r in refined if r is not None], numerics.merge_tol)
    log.info(
        f"Found {len(roots)} intersections from {crossings} crossings and "
        f"{len(seeds) - crossings} near misses"
    )
    return roots


# --- profiles ----------------------------------------------------------------------


def reconstruct_profile(d: float, e: float, spec: ProblemSpec):
    """
    Equilibrium profile of a converged root.

    Shoots from both poles with dense output and joins the two solutions at the cut; the
    series start fills the ``ε_θ`` caps at the poles.

    :raises ProfileMismatchException: If the two solutions differ by more than ``10·root_tol`` at the cut.
    :return: Tuple ``(profile on the θ-grid, vectorized interpolant θ ↦ u(θ))``.
    """
    numerics = spec.numerics
    field = spec.field
    cut = numerics.theta_cut
    eps = numerics.eps_theta

    state_u, sol_u = shoot(field, Side.UNSTABLE, d, cut, numerics, dense_output=True)
    state_s, sol_s = shoot(field, Side.STABLE, e, cut, numerics, dense_output=True)
    mismatch = max(abs(state_u.u - state_s.u), abs(state_u.p - state_s.p))
    if mismatch > 10 * numerics.root_tol:
        raise ProfileMismatchException(
            f"Profiles for (d, e) = ({d}, {e}) differ by {mismatch:.3g} at theta={cut}"
        )

    c_north = float(field.f_over_a(0.0, d, 0.0)) / 4.0
    c_south = float(field.f_over_a(math.pi, e, 0.0)) / 4.0

    def interpolant(theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.empty_like(theta)
        north = theta < eps
        south = theta > math.pi - eps
        forward = ~north & (theta <= cut)
        backward = ~south & (theta > cut)
        out[north] = d - c_north * theta[north] ** 2
        out[south] = e - c_south * (math.pi - theta[south]) ** 2
        if forward.any():
            out[forward] = sol_u.sol(theta[forward])[0]
        if backward.any():
            out[backward] = sol_s.sol(theta[backward])[0]
        return out

    profile = GridFunction(interpolant(theta_grid(numerics.grid_n)))
    return profile, interpolant


def neumann_residual(d: float, e: float, spec: ProblemSpec) -> tuple[float, float]:
    """
    ``|u_θ|`` at both poles, linearly extrapolated from the shooting starts.

    The extrapolation uses ``u_θθ = -f/a - u_θ cot θ``; for a consistent start the result is
    of order ``ε_θ²``.
    """
    numerics = spec.numerics
    field = spec.field
    residuals = []
    for side, param in ((Side.UNSTABLE, d), (Side.STABLE, e)):
        state = init_state(field, side, param, numerics)
        u_theta = state.u_theta
        u_thth = -float(field.f_over_a(state.theta, state.u, u_theta)) - u_theta / math.tan(
            state.theta
        )
        if side == Side.UNSTABLE:
            residuals.append(abs(u_theta - state.theta * u_thth))
        else:
            residuals.append(abs(u_theta + (math.pi - state.theta) * u_thth))
    return residuals[0], residuals[1]


# --- angles and indices --------------------------------------------------------------


def zeta_for_spectral(
    d: float, e: float, spec: ProblemSpec, spectral, tol: float | None = None
) -> np.ndarray:
    """
    ``ζ(Λ) = ν(θ_cut) - ν̃(θ_cut)`` for solutions of the eigenvalue equation with spectral value ``Λ``.

    ``ζ`` is decreasing in ``Λ`` and the eigenvalues solve ``ζ(Λ) = kπ``.
    """
    numerics = spec.numerics
    cut = numerics.theta_cut
    spectral = np.atleast_1d(np.asarray(spectral, dtype=float))
    forward = shoot_variational(
        spec.field, Side.UNSTABLE, d, cut, numerics, spectral=spectral, tol=tol
    )
    backward = shoot_variational(
        spec.field, Side.STABLE, e, cut, numerics, spectral=spectral, tol=tol
    )
    return forward.nu - backward.nu


def tangent_angles(d: float, e: float, spec: ProblemSpec) -> tuple[float, float, float]:
    """
    Clockwise tangent angles of both shooting curves at an intersection.

    Both angles start at (nearly) zero at their poles and are unwrapped along the
    trajectory.

    :raises NumericException: If a tangent vector collapses.
    :return: ``(ν, ν̃, ζ = ν - ν̃)``.
    """
    numerics = spec.numerics
    _, tangent_u = shoot_with_tangent(spec.field, Side.UNSTABLE, d, numerics.theta_cut, numerics)
    _, tangent_s = shoot_with_tangent(spec.field, Side.STABLE, e, numerics.theta_cut, numerics)
    return tangent_u.nu, tangent_s.nu, tangent_u.nu - tangent_s.nu


def is_hyperbolic(zeta: float, angle_tol: float) -> bool:
    """Whether ``ζ`` is farther than ``angle_tol`` from every multiple of π."""
    return abs(zeta - math.pi * round(zeta / math.pi)) > angle_tol


def index_from_zeta(zeta: float) -> int:
    return 1 + math.floor(zeta / math.pi)


def morse_index(record: EquilibriumRecord) -> int:
    """
    ``i = 1 + ⌊ζ/π⌋``.

    :raises NonHyperbolicException: If the equilibrium is not hyperbolic.
    """
    if not record.hyperbolic:
        raise NonHyperbolicException(
            f"Equilibrium {record.label} (d={record.d}) is not hyperbolic, zeta={record.zeta}"
        )
    return index_from_zeta(record.zeta)


def eigen_spectrum(
    record: EquilibriumRecord,
    spec: ProblemSpec,
    n_max: int = 4,
    executor: AbstractExecutor | None = None,
) -> list[float]:
    """
    Leading eigenvalues ``Λ_0 > Λ_1 > … > Λ_{n_max}`` of the linearization at an equilibrium.

    ``ζ(Λ)`` is sampled on ``[-50 - 10|λ|, 10 + 5|λ|]`` to bracket ``ζ(Λ) = kπ``, then each
    bracket is solved with Brent's method.

    :return: Eigenvalues in decreasing order; fewer than ``n_max + 1`` (with a warning) if not all brackets were found.
    """
    executor = default_executor(executor)
    scale = abs(spec.lmbda)
    lower, upper = -50.0 - 10.0 * scale, 10.0 + 5.0 * scale
    grid = np.linspace(lower, upper, EIGEN_GRID)
    zeta = zeta_for_spectral(record.d, record.e, spec, grid)

    brackets = []
    for k in range(n_max + 1):
        target = k * math.pi
        i = np.flatnonzero((zeta[:-1] >= target) & (zeta[1:] < target))
        if len(i) == 0:
            log.warning(
                f"No bracket for eigenvalue {k} of equilibrium {record.label} in [{lower}, {upper}]; "
                f"returning {len(brackets)} eigenvalues"
            )
            break
        if len(i) > 1:
            log.warning(f"zeta(Lambda) is not monotone near eigenvalue {k} of equilibrium {record.label}")
        brackets.append((target, grid[i[-1]], grid[i[-1] + 1]))

    def solve(bracket):
        target, lo, hi = bracket
        return brentq(
            lambda x: float(zeta_for_spectral(record.d, record.e, spec, [x])[0]) - target,
            lo,
            hi,
            xtol=1e-10,
        )

    eigenvalues = executor.map(solve, brackets)
    return sorted((float(x) for x in eigenvalues), reverse=True)


def eigenfunction(record: EquilibriumRecord, spec: ProblemSpec, eigenvalue: float) -> GridFunction:
    """
    Eigenfunction on the θ-grid, L²_w-normalized and positive at the north pole.
    """
    numerics = spec.numerics
    field = spec.field
    cut = numerics.theta_cut
    eps = numerics.eps_theta
    theta = theta_grid(numerics.grid_n)

    at_cut = np.abs(theta - cut) <= 1e-12
    north_mask = (theta >= eps) & (theta < cut) & ~at_cut
    south_mask = (theta <= math.pi - eps) & (theta > cut) & ~at_cut
    north_nodes = theta[north_mask]
    south_nodes = theta[south_mask][::-1]
    forward = shoot_variational(
        field,
        Side.UNSTABLE,
        record.d,
        cut,
        numerics,
        spectral=[eigenvalue],
        t_eval=np.append(north_nodes, cut),
    )
    backward = shoot_variational(
        field,
        Side.STABLE,
        record.e,
        cut,
        numerics,
        spectral=[eigenvalue],
        t_eval=np.append(south_nodes, cut),
    )

    tangent_u = np.array([forward.u_d[0], forward.p_d[0]])
    tangent_s = np.array([backward.u_d[0], backward.p_d[0]])
    scale = float(tangent_u @ tangent_s / (tangent_s @ tangent_s))

    values = np.empty_like(theta)
    a_n, _, b_n, _ = field.linearization(0.0, record.d, 0.0)
    a_s, _, b_s, _ = field.linearization(math.pi, record.e, 0.0)
    c_north = -(b_n - eigenvalue) / (4.0 * a_n)
    c_south = -(b_s - eigenvalue) / (4.0 * a_s)

    north = theta < eps
    south = theta > math.pi - eps
    values[north] = 1.0 + c_north * theta[north] ** 2
    values[south] = scale * (1.0 + c_south * (math.pi - theta[south]) ** 2)
    values[north_mask] = forward.solution.y[2, :-1]
    values[south_mask] = scale * backward.solution.y[2, :-1][::-1]
    values[at_cut] = forward.u_d[0]

    phi = GridFunction(values)
    phi = phi * (1.0 / phi.norm_w())
    return phi if phi.values[0] > 0 else -phi


# --- pipeline ----------------------------------------------------------------------


def _analyse_root(root_de: tuple[float, float], spec: ProblemSpec) -> dict:
    d, e = root_de
    profile, interpolant = reconstruct_profile(d, e, spec)
    nu, nu_tilde, zeta = tangent_angles(d, e, spec)
    hyperbolic = is_hyperbolic(zeta, spec.numerics.angle_tol)
    if not hyperbolic:
        log.warning(
            f"Equilibrium at (d, e) = ({d:.8g}, {e:.8g}) is not hyperbolic: zeta={zeta:.6g}"
        )
    return {
        "d": d,
        "e": e,
        "profile": profile,
        "interpolant": interpolant,
        "nu": nu,
        "nu_tilde": nu_tilde,
        "zeta": zeta,
        "hyperbolic": hyperbolic,
        "morse_index": index_from_zeta(zeta) if hyperbolic else None,
        "neumann_residual": neumann_residual(d, e, spec),
    }


def equilibria_from_curves(
    curve_u: SampledCurve,
    curve_s: SampledCurve,
    spec: ProblemSpec,
    executor: AbstractExecutor | None = None,
    with_spectrum: bool = True,
) -> list[EquilibriumRecord]:
    """
    Equilibrium records for the intersections of two cross-sections, labelled along both curves.

    :param with_spectrum: Also compute the eigenvalues down to one below the Morse index.
    :return: Records ordered by ``d``.
    """
    executor = default_executor(executor)
    roots = find_intersections(curve_u, curve_s, spec, executor)
    raw = executor.map(lambda r: _analyse_root(r, spec), roots)
    raw.sort(key=lambda item: item["d"])

    by_e = sorted(range(len(raw)), key=lambda i: raw[i]["e"])
    label_s = {i: position for position, i in enumerate(by_e, start=1)}

    records = [
        EquilibriumRecord(label_u=i + 1, label_s=label_s[i], **item)
        for i, item in enumerate(raw)
    ]

    if with_spectrum:

        def with_eigenvalues(record: EquilibriumRecord) -> EquilibriumRecord:
            n_max = max(index_from_zeta(record.zeta), 0) + 1
            return record.with_eigenvalues(eigen_spectrum(record, spec, n_max))

        records = executor.map(with_eigenvalues, records)

    log.info(
        f"{len(records)} equilibria, Morse indices {[r.morse_index for r in records]}"
    )
    return records


def compute_equilibria(
    spec: ProblemSpec,
    executor: AbstractExecutor | None = None,
    with_spectrum: bool = True,
) -> list[EquilibriumRecord]:
    """Sample both cross-sections at ``theta_cut`` and return the equilibrium records."""
    curve_u = cross_section(spec, Side.UNSTABLE, executor=executor)
    curve_s = cross_section(spec, Side.STABLE, executor=executor)
    return equilibria_from_curves(curve_u, curve_s, spec, executor, with_spectrum)
