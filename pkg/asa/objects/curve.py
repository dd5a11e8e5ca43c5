"""Shooting states and sampled cross-sections of the shooting manifolds."""

import math
from enum import Enum, unique

import numpy as np

from ..exceptions import ThetaDomainException


@unique
class Side(Enum):
    """Pole a shooting trajectory starts from."""

    UNSTABLE = "unstable"
    """Starts at the north pole θ = 0 and is parametrized by ``d = u(0)``."""

    STABLE = "stable"
    """Starts at the south pole θ = π and is parametrized by ``e = u(π)``."""

    def __str__(self):
        return self.value


class ShootState:
    """
    Point ``(θ, u, p)`` of the rescaled equilibrium system, ``p = u_τ = sin θ · u_θ``.
    """

    __slots__ = [
        "__theta",
        "__u",
        "__p",
    ]

    def __init__(self, theta: float, u: float, p: float):
        if not 0.0 < theta < math.pi:
            raise ThetaDomainException(f"theta={theta} is outside (0, pi)")
        self.__theta = float(theta)
        self.__u = float(u)
        self.__p = float(p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShootState):
            raise NotImplementedError
        return (self.theta, self.u, self.p) == (other.theta, other.u, other.p)

    def __hash__(self):
        return hash((self.theta, self.u, self.p))

    def __repr__(self):
        return f"{self.__class__.__name__}(theta={self.theta}, u={self.u}, p={self.p})"

    def __iter__(self):
        return iter((self.theta, self.u, self.p))

    @property
    def theta(self) -> float:
        return self.__theta

    @property
    def u(self) -> float:
        return self.__u

    @property
    def p(self) -> float:
        return self.__p

    @property
    def u_theta(self) -> float:
        """θ-derivative of ``u``."""
        return self.__p / math.sin(self.__theta)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "u": self.u, "p": self.p}


class TangentState:
    """
    Tangent ``(u_d, p_d)`` of a shooting curve (or a solution of the eigenvalue problem
    along a trajectory) with its unwrapped clockwise angle ``ν = atan2(-p_d, u_d)``.
    """

    __slots__ = [
        "__u_d",
        "__p_d",
        "__nu",
    ]

    def __init__(self, u_d: float, p_d: float, nu: float):
        self.__u_d = float(u_d)
        self.__p_d = float(p_d)
        self.__nu = float(nu)

    def __repr__(self):
        return f"{self.__class__.__name__}(u_d={self.u_d}, p_d={self.p_d}, nu={self.nu})"

    @property
    def u_d(self) -> float:
        return self.__u_d

    @property
    def p_d(self) -> float:
        return self.__p_d

    @property
    def nu(self) -> float:
        return self.__nu

    @property
    def norm(self) -> float:
        return math.hypot(self.__u_d, self.__p_d)


class SampledCurve:
    """
    Cross-section of a shooting manifold at a fixed θ.

    Only converged samples are kept in :attr:`params` / :attr:`points`; diverged
    parameters are listed separately and segments spanning them are marked as breaks.
    """

    __slots__ = [
        "__side",
        "__cut_theta",
        "__params",
        "__points",
        "__diverged_params",
    ]

    def __init__(
        self,
        side: Side,
        cut_theta: float,
        params: np.ndarray,
        points: np.ndarray,
        diverged_params: np.ndarray | None = None,
    ):
        """
        :param side: Which shooting manifold.
        :param cut_theta: Angle of the cross-section.
        :param params: Strictly increasing shooting parameters.
        :param points: ``(len(params), 2)`` array of ``(u, p)`` at the cut.
        :param diverged_params: Parameters whose shots diverged.
        """
        params = np.asarray(params, dtype=float)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(params) != len(points):
            raise ValueError(
                f"{len(params)} parameters but {len(points)} points on the curve"
            )
        if np.any(np.diff(params) <= 0):
            raise ValueError("Curve parameters must be strictly increasing")

        self.__side = side
        self.__cut_theta = float(cut_theta)
        self.__params = params
        self.__points = points
        self.__diverged_params = np.sort(
            np.asarray(diverged_params if diverged_params is not None else [], dtype=float)
        )

    def __len__(self):
        return len(self.__params)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"side={self.side}, "
            f"cut_theta={self.cut_theta}, "
            f"samples={len(self)}, "
            f"diverged={len(self.diverged_params)}"
            ")"
        )

    @property
    def side(self) -> Side:
        return self.__side

    @property
    def cut_theta(self) -> float:
        return self.__cut_theta

    @property
    def params(self) -> np.ndarray:
        return self.__params

    @property
    def points(self) -> np.ndarray:
        return self.__points

    @property
    def diverged_params(self) -> np.ndarray:
        return self.__diverged_params

    @property
    def breaks(self) -> np.ndarray:
        """
        Boolean array over segments: ``True`` where a diverged sample lies between two
        consecutive converged samples.
        """
        if len(self.__params) < 2:
            return np.zeros(0, dtype=bool)
        if len(self.__diverged_params) == 0:
            return np.zeros(len(self.__params) - 1, dtype=bool)
        left = np.searchsorted(self.__diverged_params, self.__params[:-1], side="right")
        right = np.searchsorted(self.__diverged_params, self.__params[1:], side="left")
        return right > left

    @property
    def gaps(self) -> list[tuple[float, float]]:
        """Parameter intervals ``(last converged, next converged)`` around diverged runs."""
        return [
            (float(self.__params[i]), float(self.__params[i + 1]))
            for i in np.flatnonzero(self.breaks)
        ]

    def csv_rows(self):
        """Rows ``param, u, p, diverged`` in parameter order."""
        rows = [(float(d), float(u), float(p), False) for d, (u, p) in zip(self.params, self.points)]
        rows += [(float(d), float("nan"), float("nan"), True) for d in self.diverged_params]
        return sorted(rows, key=lambda row: row[0])

    def to_dict(self) -> dict:
        return {
            "side": str(self.side),
            "cut_theta": self.cut_theta,
            "samples": len(self),
            "diverged": len(self.diverged_params),
            "gaps": self.gaps,
        }
