class ErtoError(Exception):
    pass


class InvalidParameter(ErtoError, ValueError):
    pass


class SaturationError(ErtoError):
    """Delivery probability at or below the usable floor."""


class UnreachableCandidate(ErtoError):
    pass


class EmptyFront(ErtoError):
    """No feasible decision vector was found."""


class NoRoute(ErtoError):
    pass


class ConfigError(ErtoError, ValueError):
    """Unreadable or invalid experiment configuration."""
