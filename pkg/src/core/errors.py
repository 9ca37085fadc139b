"""Exception hierarchy shared by every Hemotrack module."""

from typing import Optional


class HemoError(Exception):
    """Base class for all runtime errors raised by Hemotrack."""


class ConfigError(HemoError):
    """Configuration file could not be parsed or failed validation."""

    def __init__(
        self,
        message: str,
        fields: Optional[list[str]] = None,
        line: Optional[int] = None,
        errors: Optional[list[str]] = None,
    ):
        self.fields = fields or []
        self.line = line
        self.errors = errors or []
        super().__init__(message)


class InputError(HemoError):
    """Invalid tensor/array input (non-finite pixels, mismatched dims)."""


class ClipLoadError(HemoError):
    """A clip on disk violates the documented dataset layout."""

    def __init__(self, message: str, clip_id: str = "", frame: Optional[int] = None):
        self.clip_id = clip_id
        self.frame = frame
        super().__init__(message)


class CheckpointError(HemoError):
    """Checkpoint container is malformed or incompatible with the config."""


class NonFiniteLossError(HemoError):
    """Training produced a NaN/Inf loss; a diagnostic dump was written."""

    def __init__(self, message: str, dump_path: str = ""):
        self.dump_path = dump_path
        super().__init__(message)
