"""Exception hierarchy shared by all lcslab modules."""


class LcsLabError(Exception):
    """Base class for every error raised by lcslab."""


class UsageError(LcsLabError, ValueError):
    """Bad arguments: wrong dimensions, empty inputs, invalid parameters."""


class StructuralError(LcsLabError):
    """The geometric data itself is broken (e.g. a degenerate 2-form)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class CapabilityError(LcsLabError):
    """The model does not carry the data an operation needs."""


class DomainError(LcsLabError, ValueError):
    """An argument lies outside the domain of a map."""


class PreconditionError(LcsLabError):
    """A mathematical precondition of an operation is not met."""
