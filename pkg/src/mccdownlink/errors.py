"""Exception and warning types raised by the simulator."""


class MCCError(Exception):
    """Base class for all simulator errors."""


class ConfigError(MCCError, ValueError):
    """A configuration field violates its invariant.

    The offending field name is kept on ``field`` so callers (and the CLI)
    can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class PlacementInfeasible(MCCError):
    """A point could not be placed within the retry budget."""


class SingularEta(MCCError, ArithmeticError):
    """Two serving-link scale parameters coincide; partial fractions are undefined."""


class BracketFailure(MCCError):
    """No SINR threshold meets the outage constraint (hopeless link)."""


class DegenerateLink(MCCError):
    """A serving link carries no power."""


class FarFieldViolation(UserWarning):
    """Path loss was evaluated inside the reference distance d0."""
