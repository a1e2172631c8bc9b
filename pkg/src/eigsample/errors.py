"""Exception types raised across the package."""


class EigSampleError(Exception):
    """Base class for all package errors."""


class ConfigError(EigSampleError, ValueError):
    """Invalid configuration value. ``field`` names the offending key when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class CapacityError(EigSampleError):
    """Operation would need to materialize a matrix above the configured cap."""


class ShapeError(EigSampleError, ValueError):
    pass


class RestrictionError(EigSampleError, ValueError):
    """Row-norm sampling probability exceeds one for some row."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateSampleError(EigSampleError):
    """Sample is empty or spans nothing usable."""
