"""Exception types raised by the geometry and pipeline layers."""


class GeometryError(Exception):
    """Base class for all errors raised by spdtraj."""


class ValidationError(GeometryError):
    """Input violates a structural precondition (shape, symmetry, monotonicity...)."""


class NumericalRangeError(GeometryError):
    """A computation left the numerically safe range (e.g. eigenvalue underflow)."""


class AntipodalError(ValidationError):
    """Logarithm map requested between antipodal sphere points (not unique)."""
