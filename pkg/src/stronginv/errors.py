"""Exception hierarchy shared by every module of the package."""


class StrongInvError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(StrongInvError, ValueError):
    pass


class PreconditionError(StrongInvError, ValueError):
    pass


class PointNotInSet(PreconditionError):
    pass


class PointOutsideDomain(PreconditionError):
    pass


class BoundViolated(StrongInvError, ValueError):
    """Step size configuration inconsistent with the selection bound."""


class NonconvexValue(StrongInvError, ValueError):
    pass


class GuardViolated(StrongInvError, ValueError):
    pass


class SearchExhausted(StrongInvError, RuntimeError):
    """A finite search ran out of budget; refine and retry."""


class NoAdmissibleVelocity(SearchExhausted):
    def __init__(self, message, node=None, time=None, point=None):
        super().__init__(message)
        self.node = node
        self.time = time
        self.point = point


class NoConvergence(SearchExhausted):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class NoSelectionFound(SearchExhausted):
    def __init__(self, message, residual=None, time=None):
        super().__init__(message)
        self.residual = residual
        self.time = time


class RealizationUnavailable(StrongInvError, LookupError):
    pass
