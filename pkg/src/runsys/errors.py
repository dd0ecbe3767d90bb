"""Exception types shared across the package."""


class RunsysError(Exception):
    """Base class for all errors raised by runsys."""


class RangeError(RunsysError, IndexError):
    """An agent index or time lies outside the system's bounds."""


class DomainError(RunsysError, ValueError):
    """An argument is not drawn from the object it is evaluated against."""


class ConfigurationError(RunsysError, ValueError):
    """A protocol, context or scenario is ill-formed."""


class ModelError(RunsysError, ValueError):
    """A game model violates one of its structural invariants."""


class ResourceError(RunsysError, RuntimeError):
    """Enumeration exceeded its configured state budget."""

    def __init__(self, message, count):
        super().__init__(f"{message} (reached {count})")
        self.count = count


class InternalError(RunsysError, RuntimeError):
    """A transition function failed on a reachable input."""
