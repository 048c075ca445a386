"""Exception types shared across the package."""


class NswError(Exception):
    """Base class for all package errors."""

    #: process exit code used by the CLI
    exit_code = 1
    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class ValidationError(NswError, ValueError):
    kind = "validation"


class InvalidGameError(ValidationError):
    kind = "invalid-game"


class InvalidProfileError(ValidationError):
    kind = "invalid-profile"


class DomainError(ValidationError):
    """A latency evaluated to a non-positive value where a logarithm is needed."""

    kind = "domain"


class InstanceTooLargeError(NswError):
    exit_code = 2
    kind = "instance-too-large"


class ConvergenceError(NswError):
    """An iterative solver ran out of iterations.

    ``state`` holds the last iterate and ``gap`` the residual reported by the
    solver, so callers can still inspect how far it got.
    """

    exit_code = 3
    kind = "did-not-converge"

    def __init__(self, message, state=None, gap=None):
        super().__init__(message)
        self.state = state
        self.gap = gap

    def to_dict(self):
        d = super().to_dict()
        if self.gap is not None:
            d["gap"] = float(self.gap)
        if isinstance(self.state, (list, tuple)):
            d["lastState"] = list(self.state)
        return d


class ConvexityError(ValidationError):
    """Slot prices of a resource are not non-decreasing."""

    kind = "non-convex-slots"

    def __init__(self, message, resource=None, slot=None):
        super().__init__(message)
        self.resource = resource
        self.slot = slot
