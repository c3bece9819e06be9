"""Error hierarchy shared by the numerical and simulation modules.

Every error carries the CLI exit code it maps to, so the entry point can
translate failures without knowing where they came from.
"""


class BackboneError(Exception):
    exit_code = 1


class DomainError(BackboneError, ValueError):
    """An argument lies outside the domain where a formula is defined."""
    exit_code = 2


class PoleError(DomainError):
    """Argument too close to a pole of a special function."""


class CapacityError(DomainError):
    """Request exceeds a fixed size limit (lattice radius, enumeration size...)."""


class NumericalError(BackboneError, ArithmeticError):
    exit_code = 4


class NonConvergence(NumericalError):
    def __init__(self, message: str, evaluations: int = 0, estimate: float = float("nan"), error: float = float("nan")):
        super().__init__(message)
        self.evaluations = evaluations
        self.estimate = estimate
        self.error = error


class RootNotFound(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


class InsufficientData(BackboneError):
    exit_code = 3
