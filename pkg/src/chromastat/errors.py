"""Exception hierarchy shared by all chromastat modules."""


class ChromaError(Exception):
    """Base class for every error raised by chromastat."""


class DomainError(ChromaError, ValueError):
    """A value falls outside the domain of a conversion or type."""


class SingularCovarianceError(ChromaError, ArithmeticError):
    """Pooled covariance cannot be inverted and no fallback was requested."""


class InsufficientSampleError(ChromaError, ValueError):
    """Too few observations for the requested estimator or test."""


class DataFormatError(ChromaError, ValueError):
    """Malformed input file (CSV row, image, ...)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
