"""Objects describing a problem instance: coefficients, numerical settings and the problem tying them together."""

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import ProblemConfigException
from ..expression import Expression, parse_expression
from ..helpers import sha256_hexdigest

log = logging.getLogger(__name__)

FD_STEP = 1e-6
"""Relative step of the central finite differences used when no symbolic derivative exists."""

_ARGUMENT_INDEX = {"theta": 0, "u": 1, "p": 2}


def _evaluate(fn, theta, u, p):
    value = fn(theta, u, p)
    if np.ndim(value) == 0 and (np.ndim(theta) or np.ndim(u) or np.ndim(p)):
        # constant coefficients evaluate to a scalar even for array arguments
        return np.full(np.broadcast(theta, u, p).shape, float(value))
    return value


class CoefficientField:
    """
    Coefficients ``a(θ, u, p)`` and ``f(θ, u, p)`` of the equation ``u_t = a Δu + f`` with the
    reaction parameter bound in.

    Here ``p`` is the θ-derivative ``u_θ``. Evaluators accept floats or NumPy arrays and
    are safe to share between threads.
    """

    __slots__ = [
        "__a",
        "__f",
        "__lmbda",
        "__partials",
        "__symbolic",
    ]

    def __init__(self, a: Expression, f: Expression, lmbda: float):
        """
        :param a: Diffusion coefficient expression.
        :param f: Reaction term expression.
        :param lmbda: Value bound to the ``lambda`` variable.
        """
        self.__a = a
        self.__f = f
        self.__lmbda = float(lmbda)
        self.__partials = {}
        self.__symbolic = {}
        for name, expr in (("a", a), ("f", f)):
            for var in ("theta", "u", "p"):
                self.__partials[(name, var)], self.__symbolic[(name, var)] = (
                    self.__partial(expr, var)
                )

    def __partial(self, expr: Expression, var: str):
        lmbda = self.__lmbda
        derivative = expr.derivative(var)
        if derivative is not None:
            return (lambda theta, u, p: derivative(theta, u, p, lmbda)), True

        index = _ARGUMENT_INDEX[var]
        log.debug(f"Using finite differences for d/d{var} of '{expr.text}'")

        def central_difference(theta, u, p):
            args = [theta, u, p]
            x = np.asarray(args[index], dtype=float)
            h = FD_STEP * np.maximum(1.0, np.abs(x))
            plus = list(args)
            minus = list(args)
            plus[index] = x + h
            minus[index] = x - h
            return (expr(*plus, lmbda) - expr(*minus, lmbda)) / (2.0 * h)

        return central_difference, False

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientField):
            raise NotImplementedError
        return (
            self.__a == other.__a
            and self.__f == other.__f
            and self.__lmbda == other.__lmbda
        )

    def __hash__(self):
        return hash((self.__a, self.__f, self.__lmbda))

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"a={self.__a.text!r}, "
            f"f={self.__f.text!r}, "
            f"lmbda={self.__lmbda}"
            ")"
        )

    @property
    def a_expression(self) -> Expression:
        return self.__a

    @property
    def f_expression(self) -> Expression:
        return self.__f

    @property
    def lmbda(self) -> float:
        """Reaction parameter λ."""
        return self.__lmbda

    def with_lambda(self, lmbda: float) -> "CoefficientField":
        return CoefficientField(self.__a, self.__f, lmbda)

    @property
    def symbolic(self) -> dict[tuple[str, str], bool]:
        """
        Which partial derivatives are symbolic.

        :return: ``{(coefficient, variable): True if symbolic, False if finite differences}``.
        """
        return dict(self.__symbolic)

    def a(self, theta, u, p):
        lmbda = self.__lmbda
        return _evaluate(lambda t, x, q: self.__a(t, x, q, lmbda), theta, u, p)

    def f(self, theta, u, p):
        lmbda = self.__lmbda
        return _evaluate(lambda t, x, q: self.__f(t, x, q, lmbda), theta, u, p)

    def f_over_a(self, theta, u, p):
        """``f/a``, i.e. minus the Laplacian of an equilibrium."""
        return self.f(theta, u, p) / self.a(theta, u, p)

    def df_du(self, theta, u, p):
        return _evaluate(self.__partials[("f", "u")], theta, u, p)

    def df_dp(self, theta, u, p):
        return _evaluate(self.__partials[("f", "p")], theta, u, p)

    def da_du(self, theta, u, p):
        return _evaluate(self.__partials[("a", "u")], theta, u, p)

    def da_dp(self, theta, u, p):
        return _evaluate(self.__partials[("a", "p")], theta, u, p)

    def da_dtheta(self, theta, u, p):
        return _evaluate(self.__partials[("a", "theta")], theta, u, p)

    def linearization(self, theta, u, p):
        """
        Coefficients of the linearization at an equilibrium.

        With ``Δu = -f/a`` substituted for the Laplacian of the equilibrium, the linearized
        operator is ``a Δv + b v + c v_θ``.

        :return: Tuple ``(a, Δu, b, c)``.
        """
        a = self.a(theta, u, p)
        laplacian = -self.f(theta, u, p) / a
        b = self.df_du(theta, u, p) + self.da_du(theta, u, p) * laplacian
        c = self.df_dp(theta, u, p) + self.da_dp(theta, u, p) * laplacian
        return a, laplacian, b, c

    def f_over_a_dp(self, theta, u, p):
        """``∂(f/a)/∂p``."""
        a = self.a(theta, u, p)
        return (self.df_dp(theta, u, p) * a - self.f(theta, u, p) * self.da_dp(theta, u, p)) / (
            a * a
        )


@dataclass(frozen=True, slots=True)
class Numerics:
    """Numerical settings. Field names double as ``[numerics]`` config keys."""

    eps_theta: float = 1e-3
    """Distance from the poles at which shooting starts."""

    ode_tol: float = 1e-10
    """Absolute and relative tolerance of the shooting integrator."""

    grid_n: int = 256
    """Number of θ-grid intervals; the grid has ``grid_n + 1`` nodes including both poles."""

    d_min: float = -1.5
    d_max: float = 1.5
    e_min: float = -1.5
    e_max: float = 1.5

    samples: int = 401
    """Initial number of cross-section samples per curve."""

    theta_cut: float = math.pi / 2
    angle_tol: float = 1e-3
    """Minimum distance of ζ from a multiple of π for a hyperbolic equilibrium."""

    root_tol: float = 1e-8
    """Maximum mismatch ``|F(d, e)|`` of an accepted intersection."""

    merge_tol: float = 1e-6
    seed: int = 0

    overflow_guard: float = 1e6
    refine_gap: float = 0.05
    refine_box: float = 10.0
    min_param_step: float = 1e-12
    max_samples: int = 20000
    near_tol: float = 0.02
    max_iter: int = 50
    zero_eps: float = 1e-9
    """Zero threshold for zero numbers, relative to the profiles' sup norm."""

    tie_tol: float = 1e-8
    conv_tol: float = 1e-6
    stall_tol: float = 1e-10
    min_diffusion: float = 1e-8
    """Lower bound ε of the diffusion coefficient at the poles."""
    max_diffusion: float = 1e6
    """Upper bound δ of the diffusion coefficient, checked by the dissipativity sampling."""

    def validate(self) -> None:
        """
        :raises ProblemConfigException: On out-of-range values.
        """
        if not 0 < self.eps_theta < math.pi / 4:
            raise ProblemConfigException(
                f"eps_theta must be in (0, pi/4), got {self.eps_theta}"
            )
        if not self.ode_tol > 0:
            raise ProblemConfigException(f"ode_tol must be positive, got {self.ode_tol}")
        if self.grid_n < 16:
            raise ProblemConfigException(f"grid_n must be at least 16, got {self.grid_n}")
        if self.samples < 64:
            raise ProblemConfigException(f"samples must be at least 64, got {self.samples}")
        if not self.d_min < self.d_max:
            raise ProblemConfigException(
                f"Empty d range [{self.d_min}, {self.d_max}]"
            )
        if not self.e_min < self.e_max:
            raise ProblemConfigException(
                f"Empty e range [{self.e_min}, {self.e_max}]"
            )
        if not self.eps_theta < self.theta_cut < math.pi - self.eps_theta:
            raise ProblemConfigException(
                f"theta_cut must lie strictly between the shooting starts, got {self.theta_cut}"
            )
        for name in ("angle_tol", "root_tol", "merge_tol", "conv_tol", "stall_tol"):
            if not getattr(self, name) > 0:
                raise ProblemConfigException(f"{name} must be positive")
        if not 0 < self.min_diffusion < self.max_diffusion:
            raise ProblemConfigException(
                f"Need 0 < min_diffusion < max_diffusion, got {self.min_diffusion}, {self.max_diffusion}"
            )

    @property
    def d_range(self) -> tuple[float, float]:
        return self.d_min, self.d_max

    @property
    def e_range(self) -> tuple[float, float]:
        return self.e_min, self.e_max

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


class ProblemSpec:
    """
    Problem instance: coefficient expressions, parameter λ and numerical settings.
    """

    __slots__ = [
        "__name",
        "__a_text",
        "__f_text",
        "__lmbda",
        "__numerics",
        "__field",
    ]

    def __init__(
        self,
        a: str,
        f: str,
        lmbda: float = 0.0,
        numerics: Numerics | None = None,
        name: str = "problem",
    ):
        """
        Initialize a new problem.

        :param a: Diffusion coefficient expression.
        :param f: Reaction term expression.
        :param lmbda: Value of the ``lambda`` variable.
        :param numerics: Numerical settings; defaults if ``None``.
        :param name: Human readable name.
        :raises ProblemConfigException: If the numerical settings are invalid.
        """
        numerics = numerics if numerics is not None else Numerics()
        numerics.validate()
        if not math.isfinite(lmbda):
            raise ProblemConfigException(f"lambda must be finite, got {lmbda}")

        self.__name = name
        self.__a_text = a
        self.__f_text = f
        self.__lmbda = float(lmbda)
        self.__numerics = numerics
        self.__field = CoefficientField(
            parse_expression(a), parse_expression(f), self.__lmbda
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProblemSpec):
            raise NotImplementedError
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.spec_hash())

    def __repr__(self):
        return (
            f"{self.__class__.__name__}("
            f"name={self.__name!r}, "
            f"a={self.__a_text!r}, "
            f"f={self.__f_text!r}, "
            f"lmbda={self.__lmbda}"
            ")"
        )

    @property
    def name(self) -> str:
        return self.__name

    @property
    def a_text(self) -> str:
        return self.__a_text

    @property
    def f_text(self) -> str:
        return self.__f_text

    @property
    def lmbda(self) -> float:
        return self.__lmbda

    @property
    def numerics(self) -> Numerics:
        return self.__numerics

    @property
    def field(self) -> CoefficientField:
        """Compiled coefficients with λ bound."""
        return self.__field

    def with_lambda(self, lmbda: float) -> "ProblemSpec":
        """Copy of the problem with a different λ."""
        return ProblemSpec(
            self.__a_text, self.__f_text, lmbda, self.__numerics, self.__name
        )

    def with_numerics(self, **changes) -> "ProblemSpec":
        """Copy of the problem with some numerical settings replaced."""
        return ProblemSpec(
            self.__a_text,
            self.__f_text,
            self.__lmbda,
            dataclasses.replace(self.__numerics, **changes),
            self.__name,
        )

    def to_dict(self) -> dict:
        """
        Convert to a dictionary representation.

        :return: the problem as a dictionary
        """
        return {
            "name": self.name,
            "a": self.a_text,
            "f": self.f_text,
            "lambda": self.lmbda,
            "numerics": self.numerics.to_dict(),
        }

    def spec_hash(self) -> str:
        """SHA-256 of the canonical JSON of :meth:`to_dict`."""
        return sha256_hexdigest(self.to_dict())
