"""Exceptions raised by rsp_fields."""
from __future__ import annotations

from typing import Optional

from .const import EXIT_CONFIG_ERROR, EXIT_NUMERIC_ERROR, EXIT_PRECISION_ERROR


class RspError(Exception):
    """Base exception for the package."""

    exit_code = EXIT_NUMERIC_ERROR
    field: Optional[str] = None


class ConfigError(RspError):
    """Exception to indicate an invalid run configuration."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        super().__init__(message)
        self.field = field


class NumericDomainError(RspError, ValueError):
    """Exception to indicate a numeric input outside an operation's domain."""


class OutOfBandError(NumericDomainError):
    """Exception to indicate a frequency outside the attained band of a dispersion."""


class InsufficientResolutionError(NumericDomainError):
    """Exception to indicate the quantization index cannot hold the requested band."""

    def __init__(self, message: str, minimal_m_index: int) -> None:
        super().__init__(message)
        self.minimal_m_index = minimal_m_index


class DistributionalError(NumericDomainError):
    """Exception to indicate a regulated integral has no finite limit."""


class PrecisionError(RspError, ArithmeticError):
    """Exception to indicate a computation left its double-precision validation domain."""

    exit_code = EXIT_PRECISION_ERROR
