"""Exceptions used by the attractor solver."""


class AsaException(Exception):
    """
    Problem due to which we can't run further, e.g. wrong input parameters.
    """

    pass


class ExpressionSyntaxError(AsaException):
    """
    Malformed coefficient expression.
    See :func:`asa.expression.parse_expression`.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(AsaException):
    """
    Expression refers to a variable or function the DSL doesn't know.
    """

    def __init__(self, name: str, offset: int):
        super().__init__(f"Unknown identifier '{name}' at offset {offset}")
        self.name = name
        self.offset = offset


class ProblemConfigException(AsaException):
    """
    Problem configuration can't be read or holds invalid values.
    """

    pass


class ThetaDomainException(AsaException, ValueError):
    """
    Polar angle outside the open interval (0, π).
    """

    pass


class ParabolicityException(AsaException):
    """
    Diffusion coefficient is not bounded away from zero where it has to be.
    """

    pass


class NumericException(AsaException):
    """
    Non-finite value produced while evaluating coefficients or a linearization.

    The offending state is kept in :attr:`state` when one is known.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class ShootingDivergenceException(NumericException):
    """
    Shooting trajectory escaped the overflow guard or the integrator's step size underflowed.

    The last accepted state is kept in :attr:`state`.
    """

    pass


class EmptyCurveException(AsaException):
    """
    Every sample of a shooting cross-section diverged.
    """

    pass


class ProfileMismatchException(AsaException):
    """
    Profiles shot from both poles don't meet at the cut.
    """

    pass


class NonHyperbolicException(AsaException):
    """
    Operation needs a hyperbolic equilibrium.
    """

    pass


class PermutationAmbiguityException(AsaException):
    """
    Equilibria can't be ordered unambiguously along a shooting curve.
    """

    def __init__(self, message: str, offenders: list):
        super().__init__(f"{message}: {offenders}")
        self.offenders = offenders


class NotSturmPermutationException(AsaException):
    """
    Permutation does not produce a valid Morse index vector.
    """

    pass


class IndeterminateAdjacencyException(AsaException):
    """
    Adjacency depends on zero numbers that could not be resolved.
    """

    pass


class BlowUpException(AsaException):
    """
    Parabolic simulation produced NaN or overflowed.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t={time})")
        self.time = time


class UnsupportedEnergyException(AsaException):
    """
    Lyapunov energy requested for a nonlinearity it doesn't cover.
    See :func:`asa.pde.lyapunov_energy`.
    """

    pass
