"""
errors.py - Exception Hierarchy
Every failure mode the library reports has its own class so callers can
catch narrowly; all of them derive from SdafError.
"""

from typing import Any, Dict, Optional


class SdafError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SdafError, ValueError):
    """Invalid configuration value. `key` names the offending setting."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        self.detail = message
        if key:
            message = f"[{key}] {message}"
        super().__init__(message)


class ShapeMismatchError(SdafError, ValueError):
    """Field array does not match the domain it is used with."""


class ProjectionError(SdafError, ValueError):
    """Point lies outside the tubular neighbourhood of the target."""


class TransportError(SdafError, ValueError):
    """Parallel transport requested between points that are too far apart."""


class TangencyError(SdafError, ValueError):
    """Vector or spinor field is not tangent to the target along the map."""


class FrequencyError(SdafError, ValueError):
    """Lattice frequency not admissible for the spin structure."""


class WindingError(SdafError, ValueError):
    """Winding or degree computation is ill-conditioned or mismatched."""


class SpectralError(SdafError, RuntimeError):
    """Eigen-solve failure or unusable spectral data."""


class ConvergenceError(SdafError, RuntimeError):
    """Iterative solver failure. `diagnostics` holds the iteration state."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class ArchiveError(SdafError, IOError):
    """Base class for field archive failures."""


class CorruptArchiveError(ArchiveError):
    """Archive header or payload is unreadable or truncated."""


class ArchiveVersionError(ArchiveError):
    """Archive was written by an incompatible format version."""


class ArchiveShapeError(ArchiveError):
    """Archived field shape does not match the requesting run."""
