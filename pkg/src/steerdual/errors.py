"""Exception types raised across the package."""


class SteeringError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SteeringError, ValueError):
    """Malformed input: wrong shape, non-finite entries, broken invariants."""


class DomainError(SteeringError, ValueError):
    """Input is well-formed but outside the domain where the operation is defined."""


class UnsupportedError(SteeringError, NotImplementedError):
    """A case the library deliberately does not handle."""


class BracketError(SteeringError, ValueError):
    """Both bisection endpoints lie on the same side of the transition."""


class PoleError(DomainError):
    """Evaluation at a zero of a denominator."""


class SolverError(SteeringError, RuntimeError):
    """The conic solver did not reach an optimal solution."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
