"""Exception types shared across the library."""


class AdsCftError(Exception):
    """Base class for all library errors."""


class DomainError(AdsCftError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ParameterError(AdsCftError, ValueError):
    """Parameter combination not supported (poles, excluded ranges, ...)."""


class QuadratureError(AdsCftError, RuntimeError):
    """A quadrature failed to reach its target accuracy."""


class IndefiniteCovarianceError(AdsCftError, RuntimeError):
    """A discretized covariance operator is not positive definite."""


class SupportError(AdsCftError, ValueError):
    """A test function violates a support requirement."""


class InfinityError(AdsCftError, ValueError):
    """A boundary point is mapped (numerically) to the point at infinity."""
