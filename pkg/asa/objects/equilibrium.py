"""Objects that represent an equilibrium found by shooting."""

from collections.abc import Callable

import numpy as np

from .grid import GridFunction


class EquilibriumRecord:
    """
    Single equilibrium: an intersection ``(d, e)`` of the shooting curves with its profile,
    tangent angles and Morse index.
    """

    __slots__ = [
        "__d",
        "__e",
        "__profile",
        "__zeta",
        "__nu",
        "__nu_tilde",
        "__hyperbolic",
        "__morse_index",
        "__label_u",
        "__label_s",
        "__eigenvalues",
        "__neumann_residual",
        "__interpolant",
    ]

    def __init__(
        self,
        d: float,
        e: float,
        profile: GridFunction,
        zeta: float,
        hyperbolic: bool,
        morse_index: int | None,
        label_u: int,
        label_s: int,
        nu: float = 0.0,
        nu_tilde: float = 0.0,
        eigenvalues: list[float] | None = None,
        neumann_residual: tuple[float, float] = (0.0, 0.0),
        interpolant: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        """
        Initialize a new equilibrium record.

        :param d: Value at the north pole (parameter along the unstable curve).
        :param e: Value at the south pole (parameter along the stable curve).
        :param profile: Values on the θ-grid.
        :param zeta: Clockwise angle between the unstable and stable tangents.
        :param hyperbolic: Whether ζ is away from multiples of π.
        :param morse_index: Morse index, ``None`` when not hyperbolic.
        :param label_u: 1-based position along the unstable curve.
        :param label_s: 1-based position along the stable curve.
        :param nu: Tangent angle of the unstable curve at the cut.
        :param nu_tilde: Tangent angle of the stable curve at the cut.
        :param eigenvalues: Leading eigenvalues in decreasing order, if computed.
        :param neumann_residual: Extrapolated ``|u_θ|`` at both poles.
        :param interpolant: Continuous profile ``θ ↦ u(θ)`` used to refine zero numbers.
        """
        self.__d = float(d)
        self.__e = float(e)
        self.__profile = profile
        self.__zeta = float(zeta)
        self.__nu = float(nu)
        self.__nu_tilde = float(nu_tilde)
        self.__hyperbolic = bool(hyperbolic)
        self.__morse_index = morse_index
        self.__label_u = label_u
        self.__label_s = label_s
        self.__eigenvalues = list(eigenvalues) if eigenvalues is not None else None
        self.__neumann_residual = tuple(float(x) for x in neumann_residual)
        self.__interpolant = interpolant

    def __eq__(self, other) -> bool:
        if not isinstance(other, EquilibriumRecord):
            raise NotImplementedError
        return (
            self.d == other.d
            and self.e == other.e
            and self.zeta == other.zeta
            and self.label_u == other.label_u
            and self.label_s == other.label_s
            and np.array_equal(self.profile.values, other.profile.values)
        )

    def __hash__(self):
        return hash((self.d, self.e, self.label_u))

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"label_u={self.label_u}, "
            f"label_s={self.label_s}, "
            f"d={self.d}, "
            f"e={self.e}, "
            f"zeta={self.zeta}, "
            f"morse_index={self.morse_index}"
            ")"
        )

    @property
    def d(self) -> float:
        return self.__d

    @property
    def e(self) -> float:
        return self.__e

    @property
    def profile(self) -> GridFunction:
        return self.__profile

    @property
    def u_at_0(self) -> float:
        """Value at the north pole, equal to ``d``."""
        return self.__d

    @property
    def zeta(self) -> float:
        return self.__zeta

    @property
    def nu(self) -> float:
        return self.__nu

    @property
    def nu_tilde(self) -> float:
        return self.__nu_tilde

    @property
    def hyperbolic(self) -> bool:
        return self.__hyperbolic

    @property
    def morse_index(self) -> int | None:
        return self.__morse_index

    @property
    def label_u(self) -> int:
        return self.__label_u

    @property
    def label(self) -> int:
        """Canonical label, the position along the unstable curve."""
        return self.__label_u

    @property
    def label_s(self) -> int:
        return self.__label_s

    @property
    def eigenvalues(self) -> list[float] | None:
        return self.__eigenvalues

    @property
    def neumann_residual(self) -> tuple[float, float]:
        return self.__neumann_residual

    @property
    def interpolant(self) -> Callable[[np.ndarray], np.ndarray] | None:
        return self.__interpolant

    @property
    def is_constant(self) -> bool:
        values = self.__profile.values
        return bool(np.ptp(values) <= 1e-10 * max(1.0, float(np.max(np.abs(values)))))

    def with_eigenvalues(self, eigenvalues: list[float]) -> "EquilibriumRecord":
        return EquilibriumRecord(
            d=self.d,
            e=self.e,
            profile=self.profile,
            zeta=self.zeta,
            hyperbolic=self.hyperbolic,
            morse_index=self.morse_index,
            label_u=self.label_u,
            label_s=self.label_s,
            nu=self.nu,
            nu_tilde=self.nu_tilde,
            eigenvalues=eigenvalues,
            neumann_residual=self.neumann_residual,
            interpolant=self.interpolant,
        )

    def to_dict(self) -> dict:
        """
        Convert to a dictionary representation.

        :return: the equilibrium data as a dictionary, without the profile values
        """
        return {
            "label": self.label_u,
            "label_s": self.label_s,
            "d": self.d,
            "e": self.e,
            "u_at_0": self.u_at_0,
            "morse_index": self.morse_index,
            "zeta": self.zeta,
            "nu": self.nu,
            "nu_tilde": self.nu_tilde,
            "hyperbolic": self.hyperbolic,
            "eigenvalues": self.eigenvalues,
            "neumann_residual": list(self.neumann_residual),
            "profile": f"equilibria/eq_{self.label_u}.csv",
        }
