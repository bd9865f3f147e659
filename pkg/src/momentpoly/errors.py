"""Exception hierarchy shared by the pipeline stages."""


class MomentPolyError(Exception):
    """Base class for all errors raised by this package."""


class InvalidIndexError(MomentPolyError, ValueError):
    """An index vector is not in canonical (non-decreasing) form or out of range."""


class CountOverflowError(MomentPolyError, OverflowError):
    """A combinatorial count does not fit in a signed 64-bit integer."""


class InputError(MomentPolyError, ValueError):
    """Malformed input: dimension mismatch, non-finite values, bad shapes."""


class EmptySampleError(MomentPolyError, ValueError):
    """A class or sample carries zero total weight."""


class OrderError(MomentPolyError, ValueError):
    """Accumulated moments do not reach the order a computation needs."""


class SingularSystemError(MomentPolyError, ArithmeticError):
    """The moment matrix could not be factorized."""


class ModelLoadError(MomentPolyError, ValueError):
    """A model document failed validation."""


class SpecError(MomentPolyError, ValueError):
    """Invalid mixture specification."""


class DegenerateCurveError(MomentPolyError, ValueError):
    """No purity bin reached the occupancy threshold."""
