"""Exception and warning types raised by the package."""


class DogipError(Exception):
    """Base class for all package errors."""


class InvalidDimension(DogipError, ValueError):
    pass


class InvalidSize(DogipError, ValueError):
    pass


class InvalidOrder(DogipError, ValueError):
    pass


class ElementIndexError(DogipError, IndexError):
    pass


class PointOutsideSimplex(DogipError, ValueError):
    pass


class DimensionMismatch(DogipError, ValueError):
    pass


class CoefficientError(DogipError, ValueError):
    """Malformed coefficient expression, non-symmetric or non-positive coefficient."""


class SolverBreakdown(DogipError, ArithmeticError):
    """CG met a non-positive curvature ``p.Ap <= 0``."""


class RuleDegreeWarning(UserWarning):
    """Quadrature rule is not exact for the integrand's polynomial degree."""
