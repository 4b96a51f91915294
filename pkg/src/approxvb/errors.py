"""Exception hierarchy shared by the library and the CLI exit codes."""


class ApproxVBError(Exception):
    """Base class for all library errors."""


class RankError(ApproxVBError, ValueError):
    """A matrix that must have full rank does not."""


class AmbiguityError(ApproxVBError, ValueError):
    """A nearest-point problem has no unique answer (eigenvalue tie, rounding tie...)."""


class RegimeError(ApproxVBError, ValueError):
    """Input lies outside the radius where an algorithm is guaranteed to be well defined."""


class DegenerateInputError(ApproxVBError, ValueError):
    """Input data is malformed or degenerate (wrong shapes, non-orthogonal values, ...)."""


class ObstructionError(ApproxVBError, ValueError):
    """A requested construction is obstructed by a nonzero characteristic class."""
