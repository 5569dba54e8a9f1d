"""Exception types shared across the package."""


class GrmsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GrmsimError, ValueError):
    """Bad or unknown configuration key/value. Message names the key."""


class UsageError(GrmsimError):
    """Pipeline stages invoked out of order, or outputs already present."""


class CalibrationError(GrmsimError, RuntimeError):
    """Estimation cannot proceed or diverged (empty category, bad step)."""


class EstimationError(GrmsimError, RuntimeError):
    """Internal numeric failure (underflow, non-finite likelihood)."""


class GridSizeError(GrmsimError):
    """Requested quadrature grid exceeds the configured node cap."""
