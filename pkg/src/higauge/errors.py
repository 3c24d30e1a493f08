"""Exception types used across the workbench."""


class HigaugeError(Exception):
    """Base class for workbench errors."""


class ArgumentError(HigaugeError, ValueError):
    """Dimension mismatch or otherwise malformed argument."""


class StructureError(HigaugeError):
    """An algebraic closure/invariance requirement failed."""


class ValidationError(HigaugeError):
    """A structure failed its axiom validation."""


class DataError(HigaugeError):
    """Numerical field data is degenerate (e.g. singular group matrix)."""


class PreconditionError(HigaugeError):
    """An operation's precondition (e.g. a flatness cap) is violated."""


class SizeError(HigaugeError):
    """Requested problem size exceeds the configured feasibility limits."""
