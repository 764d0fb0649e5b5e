"""Exception types shared across the package."""


class ConepartError(Exception):
    """Base class for all conepart errors."""


class InvalidParameterError(ConepartError, ValueError):
    """A parameter is outside its documented domain (bad prime, shape mismatch, ...)."""


class CapacityError(ConepartError, ValueError):
    """Requested problem size exceeds the documented implementation cap."""


class CommonRayError(ConepartError, ValueError):
    """Fan generator fails the diagonal common-ray precondition."""


class DegenerateFanError(ConepartError, ValueError):
    """Fan directions collapse: some pair closer than the angular tolerance."""


class InvalidFanError(ConepartError, ValueError):
    """A fan rejected by validation was handed to a solver."""


class DomainError(ConepartError, ValueError):
    """Geometric domain violation, e.g. a ray origin outside the body interior."""


class ConfigError(ConepartError, ValueError):
    """Malformed run configuration file or flag value."""
