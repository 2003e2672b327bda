"""
Exception types shared by every package in the toolkit
"""

from typing import Optional


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class GridMismatchError(ValueError):
    """Two traces or networks live on different frequency grids."""


class SingularNetworkError(ValueError):
    def __init__(self, message: str, frequency_hz: Optional[float] = None):
        self.frequency_hz = frequency_hz
        if frequency_hz is not None:
            message = f"{message} at {frequency_hz:.6g} Hz"
        super().__init__(message)


class DegenerateCalibrationError(SingularNetworkError):
    """TRL eigenvalues coincide, the LINE carries no information."""


class ParseError(ValueError):
    """Malformed measurement file, optionally pinned to a 1-based line."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class TouchstoneParseError(ParseError):
    pass


class TraceParseError(ParseError):
    """Bad trace or power-sweep CSV."""


class UnsupportedParameterError(TouchstoneParseError):
    pass


class MaterialRangeError(ValueError):
    """Temperature outside a material property table."""
