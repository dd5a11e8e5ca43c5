"""Functions on the uniform θ-grid and simulated trajectories."""

import math
from collections.abc import Callable
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _grid(grid_n: int) -> tuple[np.ndarray, np.ndarray]:
    h = math.pi / grid_n
    theta = np.linspace(0.0, math.pi, grid_n + 1)
    # exact ∫ sin θ over each control volume; the weights sum to 2
    weights = 2.0 * np.sin(theta) * math.sin(h / 2)
    weights[0] = weights[-1] = 1.0 - math.cos(h / 2)
    theta.flags.writeable = False
    weights.flags.writeable = False
    return theta, weights


def theta_grid(grid_n: int) -> np.ndarray:
    """Nodes ``θ_j = jπ/grid_n``, ``j = 0..grid_n``."""
    return _grid(grid_n)[0]


def mass_weights(grid_n: int) -> np.ndarray:
    """Control-volume weights of the sin θ measure."""
    return _grid(grid_n)[1]


class GridFunction:
    """
    Values of a function on the uniform θ-grid including both poles.
    """

    __slots__ = [
        "__values",
    ]

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or len(values) < 17:
            raise ValueError(
                f"Grid function needs at least 17 nodes, got shape {values.shape}"
            )
        values.flags.writeable = False
        self.__values = values

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], grid_n: int) -> "GridFunction":
        """Sample a vectorized function of θ."""
        theta = theta_grid(grid_n)
        return cls(np.broadcast_to(fn(theta), theta.shape))

    @classmethod
    def constant(cls, value: float, grid_n: int) -> "GridFunction":
        return cls(np.full(grid_n + 1, float(value)))

    def __len__(self):
        return len(self.__values)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"grid_n={self.grid_n}, "
            f"min={self.__values.min()}, "
            f"max={self.__values.max()}"
            ")"
        )

    def __add__(self, other):
        return GridFunction(self.__values + _values(other))

    def __sub__(self, other):
        return GridFunction(self.__values - _values(other))

    def __mul__(self, scalar: float):
        return GridFunction(self.__values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.__values)

    @property
    def values(self) -> np.ndarray:
        """Read-only values at the grid nodes."""
        return self.__values

    @property
    def grid_n(self) -> int:
        return len(self.__values) - 1

    @property
    def h(self) -> float:
        return math.pi / self.grid_n

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.grid_n)

    @property
    def weights(self) -> np.ndarray:
        return mass_weights(self.grid_n)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.__values)))

    def inner(self, other) -> float:
        """L²_w inner product."""
        return float(np.sum(self.weights * self.__values * _values(other)))

    def norm_w(self) -> float:
        """L²_w norm ``(Σ m_j u_j²)^½``."""
        return math.sqrt(self.inner(self))

    def distance_w(self, other) -> float:
        return (self - other).norm_w()

    def reflected(self) -> "GridFunction":
        """The function ``θ ↦ u(π - θ)``."""
        return GridFunction(self.__values[::-1])

    def derivative(self) -> np.ndarray:
        """Central differences of ``u_θ``, zero at the poles."""
        du = np.zeros_like(self.__values)
        du[1:-1] = (self.__values[2:] - self.__values[:-2]) / (2.0 * self.h)
        return du

    def csv_rows(self):
        return zip(self.theta.tolist(), self.__values.tolist())


def _values(other) -> np.ndarray:
    if isinstance(other, GridFunction):
        return other.values
    return np.asarray(other, dtype=float)


class Trajectory:
    """
    Snapshots ``(t, u)`` of a simulated solution.
    """

    __slots__ = [
        "__times",
        "__snapshots",
        "__dt",
        "__scheme",
    ]

    def __init__(
        self,
        snapshots: list[tuple[float, GridFunction]],
        dt: float,
        scheme: str,
    ):
        """
        :param snapshots: ``(t, u)`` pairs with strictly increasing ``t``.
        :param dt: Time step used.
        :param scheme: ``"imex"`` or ``"explicit"``.
        """
        times = np.array([t for t, _ in snapshots], dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("Snapshot times must be strictly increasing")
        self.__times = times
        self.__snapshots = [u for _, u in snapshots]
        self.__dt = float(dt)
        self.__scheme = scheme

    def __len__(self):
        return len(self.__snapshots)

    def __getitem__(self, index: int) -> tuple[float, GridFunction]:
        return float(self.__times[index]), self.__snapshots[index]

    def __iter__(self):
        return zip(self.__times.tolist(), self.__snapshots)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"snapshots={len(self)}, "
            f"dt={self.dt}, "
            f"scheme={self.scheme}"
            ")"
        )

    @property
    def times(self) -> np.ndarray:
        return self.__times

    @property
    def snapshots(self) -> list[GridFunction]:
        return list(self.__snapshots)

    @property
    def final(self) -> GridFunction:
        return self.__snapshots[-1]

    @property
    def dt(self) -> float:
        return self.__dt

    @property
    def scheme(self) -> str:
        return self.__scheme

    def csv_rows(self):
        """Long-format rows ``t, theta, u``."""
        for t, u in self:
            for theta, value in u.csv_rows():
                yield t, theta, value


class LagrangianTable:
    """
    Tabulated solution ``g`` of the characteristic equation for the Lagrangian on a lattice of
    initial ``(u, p)`` values, with nearest-neighbour queries.
    """

    __slots__ = [
        "__theta",
        "__u",
        "__p",
        "__g",
        "__flagged",
    ]

    def __init__(
        self,
        theta: np.ndarray,
        u: np.ndarray,
        p: np.ndarray,
        g: np.ndarray,
        flagged: np.ndarray,
    ):
        """
        :param theta: Tabulation angles, shape ``(T,)``.
        :param u: Characteristic ``u`` values, shape ``(M, T)``.
        :param p: Characteristic ``u_θ`` values, shape ``(M, T)``.
        :param g: ``g`` values, shape ``(M, T)``.
        :param flagged: Lattice points whose characteristic blew up, shape ``(M,)``.
        """
        self.__theta = np.asarray(theta, dtype=float)
        self.__u = np.asarray(u, dtype=float)
        self.__p = np.asarray(p, dtype=float)
        self.__g = np.asarray(g, dtype=float)
        self.__flagged = np.asarray(flagged, dtype=bool)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"lattice={len(self.__flagged)}, "
            f"angles={len(self.__theta)}, "
            f"flagged={int(self.__flagged.sum())}"
            ")"
        )

    @property
    def theta(self) -> np.ndarray:
        return self.__theta

    @property
    def g_values(self) -> np.ndarray:
        return self.__g

    @property
    def flagged(self) -> np.ndarray:
        return self.__flagged

    def g(self, theta: float, u: float, p: float) -> float:
        """
        Nearest-neighbour value of ``g``.

        :raises ValueError: If every lattice point is flagged.
        """
        usable = np.flatnonzero(~self.__flagged)
        if len(usable) == 0:
            raise ValueError("All characteristics of the lattice blew up")
        j = int(np.argmin(np.abs(self.__theta - theta)))
        distance = np.hypot(self.__u[usable, j] - u, self.__p[usable, j] - p)
        return float(self.__g[usable[np.argmin(distance)], j])

    def l_pp(self, theta: float, u: float, p: float) -> float:
        """``L_pp = exp(g)``, positive by construction."""
        return math.exp(self.g(theta, u, p))
