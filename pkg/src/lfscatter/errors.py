"""Exception hierarchy shared by all modules."""


class LFScatterError(Exception):
    """Base class for package errors."""


class ConfigurationError(LFScatterError, ValueError):
    """Invalid lattice, physics, or engine parameters."""


class EncodingError(LFScatterError, ValueError):
    """A label or bitstring cannot be mapped through the register encoding."""


class SingularModeError(LFScatterError, ArithmeticError):
    """The regularized Poisson operator has a zero eigenvalue on a populated mode."""


class WidthMismatchError(LFScatterError, ValueError):
    """Operator and register widths disagree."""


class ProjectionError(LFScatterError, ArithmeticError):
    """Postselection onto a subspace with (numerically) zero probability."""
