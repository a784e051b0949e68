"""Exception hierarchy for nodal_lab.

Every numerical failure mode that the library reports (rather than silently
returning a degraded value) has its own class, so callers and the batch
driver can record a precise status per mode.
"""


class NodalLabError(Exception):
    """Base class for all library errors."""


# special functions
class BesselOverflowError(NodalLabError, OverflowError):
    pass


class PrecisionError(NodalLabError, ArithmeticError):
    pass


class BranchCutError(NodalLabError, ValueError):
    pass


# geometry
class CurveError(NodalLabError, ValueError):
    pass


class OutOfTubeError(NodalLabError, ValueError):
    pass


class BranchUnsafeError(NodalLabError, ValueError):
    pass


class DiagonalSingularityError(NodalLabError, ZeroDivisionError):
    pass


# modes
class RootNotBracketedError(NodalLabError):
    pass


class DegenerateTraceError(NodalLabError):
    pass


class ShootingDivergedError(NodalLabError):
    pass


class IndexNotFoundError(NodalLabError):
    pass


class ParseError(NodalLabError, ValueError):
    pass


class NormalizationError(NodalLabError, ValueError):
    pass


# continuation
class UnwrapAmbiguityError(NodalLabError):
    pass


class BranchMismatchError(NodalLabError):
    pass


class NearPoleQuadratureError(NodalLabError):
    pass


class QuadratureStalledError(NodalLabError):
    pass


class KernelOverflowError(NodalLabError, OverflowError):
    pass


# counting
class UnresolvedOscillationError(NodalLabError):
    pass


class NonIntegerWindingError(NodalLabError):
    pass


class LogSingularityError(NodalLabError):
    pass


class ZeroRestrictionError(NodalLabError):
    pass


class ConfigError(NodalLabError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
