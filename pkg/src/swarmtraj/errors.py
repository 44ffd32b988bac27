"""Exception types raised across the package."""


class SwarmTrajError(Exception):
    """Base class for all package errors."""


class DegenerateInput(SwarmTrajError, ValueError):
    pass


class NonPositiveDuration(SwarmTrajError, ValueError):
    pass


class SingularTransform(SwarmTrajError, ValueError):
    pass


class NonMonotoneTimestamp(SwarmTrajError, ValueError):
    pass


class DurationMismatch(SwarmTrajError, ValueError):
    pass


class SingularKKT(SwarmTrajError, ArithmeticError):
    pass


class BracketCollapse(SwarmTrajError, ValueError):
    pass


class PackingFailure(SwarmTrajError, RuntimeError):
    pass
