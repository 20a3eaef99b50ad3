"""Exception hierarchy.

``ConfigError`` covers malformed inputs (CLI exit code 2); everything under
``NumericalError`` is a failure of the geometry or integration itself (exit
code 3).
"""


class SSGError(Exception):
    pass


class ConfigError(SSGError, ValueError):
    pass


class NumericalError(SSGError, ArithmeticError):
    pass


class SingularGram(NumericalError):
    """Truncated directions are (numerically) linearly dependent."""


class NotTransversal(NumericalError):
    """The coordinate projection does not map ker Q onto R^k."""


class EmptySlice(NumericalError):
    """The affine subspace misses the sphere of radius sqrt(N)."""


class FormulaMismatch(NumericalError):
    """Two independent routes to the same quantity disagree."""


class ToleranceNotReached(NumericalError):
    """Adaptive refinement ran out of budget before meeting the tolerance."""


class MembershipError(NumericalError):
    """A sampled point failed the slice membership residual check."""
