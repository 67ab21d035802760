"""Exception types shared across the package."""

__all__ = ["ConfigError", "NumericalError", "MaxIterationsError"]


class ConfigError(ValueError):
    """Invalid experiment configuration or file format."""


class NumericalError(RuntimeError):
    """NaN, lost positive definiteness, or another numerical failure."""


class MaxIterationsError(RuntimeError):
    """An iterative solve hit its iteration cap without converging."""
