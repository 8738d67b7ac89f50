from typing import Optional


class FieldQuantError(Exception):
    """Base class for all library errors"""


class DomainError(FieldQuantError, ValueError):
    """Argument or parameter outside its allowed domain"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ConvergenceError(FieldQuantError):
    """Quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, best_estimate: Optional[float] = None,
                 error_estimate: Optional[float] = None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class DivergenceError(FieldQuantError):
    """Integral diverges for a lossless medium"""


class TruncationError(FieldQuantError):
    """Band-limited integral leaves too much weight outside the band"""

    def __init__(self, message: str, tail_fraction: Optional[float] = None):
        super().__init__(message)
        self.tail_fraction = tail_fraction


class UnsupportedRegimeError(FieldQuantError):
    """Parameters fall outside the regime a formula is valid in"""


class ConfigError(FieldQuantError):
    """Invalid run configuration"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None,
                 source: Optional[str] = None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.source = source

    def __str__(self):
        location = ''
        if self.source:
            location = f"{self.source}:{self.line}: " if self.line else f"{self.source}: "
        elif self.line:
            location = f"line {self.line}: "
        field = f"{self.field}: " if self.field else ''
        return f"{location}{field}{self.args[0]}"
