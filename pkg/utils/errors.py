"""
Exception types shared by the lattice-relay modules.
"""

from typing import Optional


class LatticeRelayError(Exception):
    """Base class for every error raised by this project."""


class LatticeInputError(LatticeRelayError, ValueError):
    """Bad input to a lattice/channel/rate operation (dimension mismatch, non-finite, bad SNR)."""


class ConfigurationError(LatticeRelayError, ValueError):
    """Invalid chain parameters or run configuration."""


class CapacityError(LatticeRelayError, RuntimeError):
    """Codebook or list enumeration would exceed the configured cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"Enumeration of {size} points exceeds cap {cap}; shrink n or k")


class PowerConstraintError(LatticeRelayError, RuntimeError):
    """Encoder output violates the channel input power bound (encoder bug)."""


class AmbiguousListError(LatticeRelayError, RuntimeError):
    """List resolution left zero or several candidate codewords."""

    def __init__(self, survivors: int):
        self.survivors = survivors
        super().__init__(f"List resolution left {survivors} candidates (expected exactly 1)")


class ResultsIOError(LatticeRelayError, OSError):
    """Writing or reading a result file failed."""

    def __init__(self, path: str, reason: Optional[str] = None):
        self.path = path
        message = f"Result file I/O failed for {path}"
        if reason:
            message += f": {reason}"
        super().__init__(message)
