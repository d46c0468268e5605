"""Exception hierarchy shared across the package."""


class TrimtailError(Exception):
    """Base class for all package errors."""


class ConfigError(TrimtailError):
    """Invalid configuration: bad trim counts, mismatched ranges, unreadable files."""


class DomainError(TrimtailError):
    """An argument lies outside the mathematical domain of an operation."""


class CapabilityError(TrimtailError):
    """A model lacks the data (quantile density or jump list) an operation needs."""


class NumericError(TrimtailError):
    """Non-finite values, or a quadrature that cannot reach its tolerance."""


class AssumptionError(TrimtailError):
    """A standing assumption is violated (e.g. the asymptotic variance is not positive)."""
