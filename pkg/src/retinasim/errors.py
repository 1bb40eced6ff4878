"""Exception taxonomy shared by every module in the package.

The hierarchy is deliberately shallow: callers that only want "did the
library object to my inputs" can catch :class:`Error`; the command-line
front end maps subclasses onto distinct exit codes.
"""

__all__ = [
    "Error",
    "DomainError",
    "InfeasibleError",
    "ConfigError",
    "MapFormatError",
    "PlacementError",
    "MenuError",
    "BoundInapplicableError",
]


class Error(Exception):
    """Base class for all errors raised by this package."""


class DomainError(Error, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasibleError(Error):
    """No plan satisfies the requested operating targets."""


class ConfigError(Error):
    """A structurally valid but unusable configuration was supplied."""


class MapFormatError(Error):
    """A persisted transmission map failed to parse or validate."""


class PlacementError(InfeasibleError):
    """A pattern challenge could not be placed on the given map."""


class MenuError(InfeasibleError):
    """A candidate menu of the requested size could not be assembled."""


class BoundInapplicableError(DomainError):
    """Inputs violate the validity conditions of an analytic bound."""
