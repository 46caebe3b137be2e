"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical operation failed (singular weight matrix, non-convergence)."""


class ConfigError(Exception):
    """A run configuration is missing, malformed, or inconsistent."""
