"""Exception types shared across the package."""


class LimitOpsError(Exception):
    """Base class for all limitops errors."""


class InvalidPointError(LimitOpsError, ValueError):
    """A point does not belong to the space, or has the wrong arity."""


class InvalidConfigError(LimitOpsError, ValueError):
    """A descriptor/config object failed validation."""


class UnsupportedConstructionError(LimitOpsError):
    """The requested construction is not defined for this space kind."""


class ScopeError(LimitOpsError, ValueError):
    """A scope window is too small for the requested computation."""


class TruncationError(LimitOpsError, ValueError):
    """Input support too close to the window boundary; the result would be
    silently truncated."""
