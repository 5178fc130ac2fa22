"""Exception types shared across the package."""


class MffError(Exception):
    """Base class for all package errors."""


class DimensionError(MffError):
    """Tensor shapes are incompatible for the requested operation."""


class ParameterError(MffError):
    """An operation argument is outside its valid range."""


class ContractError(MffError):
    """An internal contract was violated (malformed value, wrong tap point)."""


class ConfigurationError(MffError):
    """A run configuration is invalid or insufficient for the requested run."""


class DataError(MffError):
    """Dataset could not be read or failed validation."""


class NumericError(MffError):
    """A non-finite value appeared where a finite one is required."""
