"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(ArithmeticError):
    """A series, continued fraction or quadrature failed to converge."""


class UnsupportedDistributionError(TypeError):
    """A score was asked of a distribution variant it cannot handle."""


class ValidationError(ValueError):
    """Input data failed validation (bad CSV rows, empty datasets, ...)."""
