"""Exception types raised across the package."""


class SeroFoiError(Exception):
    """Base class for all package errors."""


class AgeOutOfDomain(SeroFoiError, ValueError):
    """An age lies outside the domain on which the force of infection is defined."""


class InvalidGeometry(SeroFoiError, ValueError):
    """A sampling box or trapezoid has inconsistent bounds or edge widths."""


class TimeBeforeBirth(SeroFoiError, ValueError):
    """A cohort was queried before its birth time."""


class GridTooNarrow(SeroFoiError, ValueError):
    """The cohort grid does not cover every characteristic crossing a box."""


class QuadratureNonConvergence(SeroFoiError, RuntimeError):
    pass


class EmptySample(SeroFoiError, ValueError):
    pass


class LagTooLarge(SeroFoiError, ValueError):
    pass


class DegenerateVariance(SeroFoiError, ValueError):
    pass


class NonPositiveError(SeroFoiError, ValueError):
    """Convergence orders need strictly positive error values."""


class ParseError(SeroFoiError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(SeroFoiError, ValueError):
    pass


class ConfigError(SeroFoiError, ValueError):
    pass
