"""Exception hierarchy shared by every service"""

from typing import Optional


class LatentMarkError(Exception):
    """Base class for all lab errors"""


class InvalidDimensionError(LatentMarkError, ValueError):
    """Latent dimension is not a positive integer"""


class DegenerateInputError(LatentMarkError, ValueError):
    """Input has no direction (zero vector) or no elements"""


class DomainError(LatentMarkError, ValueError):
    """Argument lies outside the function's domain"""


class DimensionMismatchError(LatentMarkError, ValueError):
    """Two operands (or a key and a latent) disagree on dimension"""


class ParameterError(LatentMarkError, ValueError):
    """Scheme, attack or game parameters violate their constraints"""


class InconsistentSystemError(LatentMarkError):
    """GF(2) parity system has no solution"""


class ProbeTooLargeError(LatentMarkError):
    """Exhaustive enumeration would exceed the allowed size"""

    def __init__(self, message: str, estimated_patterns: int):
        super().__init__(message)
        self.estimated_patterns = estimated_patterns


class InterpolationError(LatentMarkError, ValueError):
    """A curve cannot be inverted (not monotone or too short)"""


class ConfigError(LatentMarkError):
    """Scenario config failed to parse or validate"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
