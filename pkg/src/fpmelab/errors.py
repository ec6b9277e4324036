"""Exception types shared across the package."""


class FpmeError(Exception):
    """Base class for all errors raised by fpmelab."""


# -- grid construction / field algebra ---------------------------------------

class InvalidDim(FpmeError, ValueError):
    pass


class NotPowerOfTwo(FpmeError, ValueError):
    pass


class NonpositiveLength(FpmeError, ValueError):
    pass


class InvalidExponent(FpmeError, ValueError):
    pass


class GridMismatch(FpmeError, ValueError):
    """Arithmetic between fields living on different grids."""


class NonFiniteState(FpmeError, ValueError):
    """NaN/Inf detected in field values."""


# -- fractional operators -----------------------------------------------------

class OutOfRangeOrder(FpmeError, ValueError):
    pass


class InvalidOrder(FpmeError, ValueError):
    pass


class GridTooLarge(FpmeError, ValueError):
    """Guard for O(M^2) double sums on grids that are too big."""


class NegativeInput(FpmeError, ValueError):
    pass


# -- time stepping ------------------------------------------------------------

class CflViolation(FpmeError, ValueError):
    pass


class IncompatibleRescale(FpmeError, ValueError):
    pass


# -- diagnostics --------------------------------------------------------------

class WindowNotCovered(FpmeError, ValueError):
    pass


class InsufficientDecade(FpmeError, ValueError):
    pass


class DegenerateRegression(FpmeError, ValueError):
    pass


# -- persistence / configuration ----------------------------------------------

class MagicMismatch(FpmeError, ValueError):
    pass


class VersionUnsupported(FpmeError, ValueError):
    pass


class DimensionMismatch(FpmeError, ValueError):
    pass


class ConfigError(FpmeError, ValueError):
    """Raised for unparseable or invalid experiment configs.

    ``line`` is the 1-based line number of the offending entry when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BoundaryContamination(UserWarning):
    """Solution mass has reached the outer shell of the periodic box."""
