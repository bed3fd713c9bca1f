"""
Orbita Exceptions
=================

Every failure raised by the package derives from OrbitaError so that the
CLI can turn it into a machine-readable error record.
"""

from typing import Any, Dict, Optional


class OrbitaError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TruncationError(OrbitaError, ValueError):
    """Raised when a grid or truncation cannot hold the requested support."""
    pass


class NormalizationError(OrbitaError, ValueError):
    """Raised when an operation receives an unnormalized state or density."""
    pass


class KernelError(OrbitaError, ValueError):
    """Raised when a POVM kernel violates its defining conditions."""
    pass


class ParameterError(OrbitaError, ValueError):
    """Raised for out-of-range family, mode or bench parameters."""
    pass


class ConvergenceError(OrbitaError):
    """Raised when an iterative or adaptive computation does not converge."""
    pass


class PropagationError(OrbitaError):
    """Raised when free-space propagation cannot be evaluated."""
    pass


class ApertureError(OrbitaError, ValueError):
    """Raised when an aperture lies outside the computed frequency grid."""
    pass


class DeconvolutionError(OrbitaError):
    """Raised when the crosstalk inversion is ill-posed as requested."""
    pass


class ConfigError(OrbitaError):
    """Raised when a configuration or scenario file is invalid."""
    pass
