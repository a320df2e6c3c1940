"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


class NumericError(ArithmeticError):
    """A numerical procedure produced a non-finite or unconverged result."""


class QuadratureError(NumericError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (error estimate {residual:.3e})")
        self.residual = residual


class RetryHalveDt(Exception):
    """Raised by a single step when the density enters the guard band.

    The caller is expected to retry with half the time step.
    """

    def __init__(self, cell, rho):
        super().__init__(f"density {rho!r} in cell {cell} entered the guard band")
        self.cell = cell
        self.rho = rho


class NonFiniteError(NumericError):
    def __init__(self, cell, term):
        super().__init__(f"non-finite value in cell/node {cell} during {term} update")
        self.cell = cell
        self.term = term


class StiffnessFailure(NumericError):
    """Too many consecutive step halvings; carries the last accepted state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
