"""Exception hierarchy shared across the toolkit.

Exit-code mapping for the CLI lives in cli.py; library code only raises.
"""


class SplatforgeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SplatforgeError):
    """Invalid or inconsistent configuration."""


class InvalidParameterError(SplatforgeError):
    """An argument violates a documented precondition (non-finite, wrong range)."""


class EmptyInputError(SplatforgeError):
    """An operation received an empty collection where at least one item is required."""


class InsufficientPointsError(SplatforgeError):
    """Too few points for the operation (e.g. nearest-neighbor scales need M >= 2)."""


class MissingAttributeError(SplatforgeError):
    """A required optional attribute is absent (e.g. mesh without vertex colors)."""


class ContractViolationError(SplatforgeError):
    """Internal API contract broken (shape mismatch, stale forward buffers)."""


class PlyParseError(SplatforgeError):
    """Malformed PLY input; carries the byte offset where parsing failed."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class ObjParseError(SplatforgeError):
    """Malformed OBJ input."""


class IoError(SplatforgeError):
    """File not found / unreadable / unwritable."""


class GuidanceFailureError(SplatforgeError):
    """The noise predictor failed (non-finite output, timeout, malformed response)."""


class MissingTargetError(GuidanceFailureError):
    """Mock predictor has no target registered for the requested camera."""


class ServiceError(SplatforgeError):
    """Remote service unreachable or returned a protocol-level error."""


class NumericalAbortError(SplatforgeError):
    """Training aborted for numerical reasons (e.g. too many skipped iterations)."""
