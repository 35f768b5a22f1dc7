"""Exception hierarchy for the otnn toolkit.

Exit-code mapping for the CLI lives in ``otnn.cli``; library code raises
these directly.
"""


class OtnnError(Exception):
    """Base class for all toolkit errors."""


class FormatError(OtnnError):
    """Malformed file header, record, or JSONL line."""


class IntegrityError(OtnnError):
    """Structurally valid file with inconsistent content (dim mismatch,
    duplicate ids, non-finite values, checksum mismatch)."""


class EmptyDatasetError(OtnnError):
    """Dataset with zero records where at least one is required."""


class DegenerateEmbeddingError(OtnnError):
    """Zero-norm embedding encountered where a direction is required."""


class ValidationError(OtnnError):
    """Precondition violation on an operation argument."""


class ShapeError(ValidationError):
    """Operands with incompatible dimensions."""


class BalanceError(ValidationError):
    """Measures whose total masses do not match the balanced-OT contract."""


class SizeLimitError(ValidationError):
    """Input exceeds a hard size bound (e.g. factorial-time oracle)."""


class MappingError(ValidationError):
    """An id could not be resolved against a neighbor structure."""


class DomainError(ValidationError):
    """Value outside the mathematical domain of an operation."""


class ConfigError(ValidationError):
    """Invalid or inconsistent training configuration."""


class NumericalError(OtnnError):
    """Non-finite loss or gradient; carries context for diagnosis."""

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown
