"""Exception hierarchy shared across the package."""


class SubstateError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SubstateError, ValueError):
    """An input operator violates a type invariant (shape, Hermiticity, trace, ...)."""


class DomainError(SubstateError, ValueError):
    """A quantity is undefined for the given arguments."""


class SupportError(DomainError):
    """``supp(rho)`` is not contained in ``supp(sigma)``.

    ``vector`` holds a unit vector carrying the offending weight of ``rho``
    outside the support of ``sigma``.
    """

    def __init__(self, message, vector=None):
        super().__init__(message)
        self.vector = vector


class SolverError(SubstateError, RuntimeError):
    """The SDP engine did not reach a certified optimum."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
