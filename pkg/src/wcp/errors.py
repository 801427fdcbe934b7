"""Exception types raised across the package."""


class WCPError(Exception):
    """Base class for package errors."""


class InvariantError(WCPError, ValueError):
    """A constructed object violates one of its invariants."""


class ParseError(WCPError, ValueError):
    """A law literal or config value could not be parsed."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class NotSupercritical(WCPError, ValueError):
    """The infection parameter does not exceed the critical value."""


class UnsupportedAlpha(WCPError, ValueError):
    pass


class StepTooLarge(WCPError, RuntimeError):
    """ODE integration left [0, 1] by more than the clamping tolerance."""


class NoConvergence(WCPError, RuntimeError):
    pass


class Extinct(WCPError, RuntimeError):
    """A step was requested from the all-healthy absorbing state."""


class TooLarge(WCPError, ValueError):
    pass


class DomainMismatch(WCPError, ValueError):
    pass


class GuardTripped(WCPError, ValueError):
    """An experiment was configured for the wrong regime."""


class SchemaError(WCPError, ValueError):
    pass


class IoError(WCPError, OSError):
    """Output could not be written or input could not be read."""
