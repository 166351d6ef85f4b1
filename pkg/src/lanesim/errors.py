"""Exception types raised across lanesim."""


class LanesimError(Exception):
    """Base class for all lanesim errors."""


class ParseError(LanesimError, ValueError):
    """A network, demand or config file could not be parsed."""


class ValidationError(LanesimError, ValueError):
    """A parsed object violates a structural invariant.

    The offending element id is available as ``element``.
    """

    def __init__(self, element, message=None):
        self.element = element
        super().__init__(message or f"invalid element {element!r}")


class InvalidParam(LanesimError, ValueError):
    """An argument is outside its admissible range."""


class ConfigError(LanesimError, ValueError):
    """A scenario or sweep configuration is invalid."""


class Unreachable(LanesimError):
    """No route exists between two edges."""

    def __init__(self, origin, destination):
        self.origin = origin
        self.destination = destination
        super().__init__(f"{destination!r} is unreachable from {origin!r}")


class EmptyNetworkInterval(LanesimError, ValueError):
    """Mean space speed requested for an interval with no vehicles."""


class EmptyMfd(LanesimError, ValueError):
    """Critical point requested from an empty MFD."""


class MissingBaseline(LanesimError, ValueError):
    """Relative metrics need a 0% penetration group."""
