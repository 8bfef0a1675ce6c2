"""Exception types raised across the package."""


class BleproxError(Exception):
    """Base class for all package errors."""


class DataError(BleproxError):
    """Input data could not be used."""


class NumericError(BleproxError):
    """A numerical routine failed or was asked for an undefined value."""


class DomainError(NumericError, ValueError):
    pass


class NonNegativeRssi(DomainError, DataError):
    pass


class MalformedRow(DataError, ValueError):
    pass


class EmptyFile(DataError):
    pass


class EmptySequence(DataError, ValueError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class InsufficientData(DataError):
    pass


class InvalidDistribution(DataError, ValueError):
    pass


class InfiniteVariance(NumericError):
    pass


class DegenerateLabels(DataError):
    pass


class AllZeroWeights(DataError):
    pass


class SingularKernel(NumericError):
    pass


class InfeasibleStratification(DataError):
    pass


class ConfigError(BleproxError):
    """Bad command-line or file configuration."""
