"""Exception hierarchy shared by every module."""


class WarpFockError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(WarpFockError, ValueError):
    """Inputs disagree in dimension, grid, or are otherwise malformed."""


class AdmissibilityError(ConfigurationError):
    """A deformation matrix is not of the admissible block form."""


class RealizabilityError(ConfigurationError):
    """A one-particle unitary cannot be represented exactly on the grid.

    ``nearest`` carries the closest lattice-compatible parameter, if any.
    """

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class NumericalError(WarpFockError, ArithmeticError):
    """Quadrature or extrapolation failed to reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RangeError(WarpFockError, OverflowError):
    """Evaluation left the representable range (overflow, aliasing, grid edge)."""


class EmptySupportError(WarpFockError, ValueError):
    """A numerical support came out empty."""


class OrderingError(WarpFockError, ValueError):
    """A precursor condition between velocity supports failed."""


class PreconditionError(WarpFockError, ValueError):
    """A documented precondition was checked and does not hold."""
