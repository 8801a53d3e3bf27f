"""Semantic exception types shared across the package."""


class GaussboundError(Exception):
    """Base class for all package-specific errors."""


class DomainError(GaussboundError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InsufficientDataError(GaussboundError, ValueError):
    """Too few samples to carry out the requested estimate."""


class ParameterError(GaussboundError, ValueError):
    """A configuration parameter is out of its documented range."""


class InvalidCovarianceError(GaussboundError, ValueError):
    """A covariance block violates symmetry or positive semi-definiteness."""


class ConditioningError(GaussboundError, RuntimeError):
    """A linear system is too ill-conditioned to solve reliably."""


class UnsupportedModelError(GaussboundError, TypeError):
    """A synthetic model does not expose the structure an operation needs."""
