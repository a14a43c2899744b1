"""Exception taxonomy shared across the package."""


class CrossQError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CrossQError):
    """Invalid configuration: bad key, bad value, or inconsistent options."""


class ShapeError(CrossQError):
    """Array dimensions do not line up."""


class EstimationError(CrossQError):
    """An estimator was called on inputs it cannot estimate from."""


class ProtocolError(CrossQError):
    """Episodic interface misuse, e.g. stepping a finished episode."""


class InsufficientDataError(CrossQError):
    """Not enough stored data to satisfy the request."""
