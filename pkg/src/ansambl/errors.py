"""Shared exception types."""


class AnsamblError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(AnsamblError):
    """An operation was called with arguments violating its preconditions."""


class ConfigError(AnsamblError):
    """Configuration rejected; `path` names the offending document location."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.reason = message
        super().__init__(f"{path}: {message}")


class CalibrationError(AnsamblError):
    """Voice-profile calibration could not separate singing from the rest."""

    def __init__(self, message: str, achieved_rate: float | None = None,
                 per_label: dict | None = None):
        super().__init__(message)
        self.achieved_rate = achieved_rate
        self.per_label = per_label or {}


class StreamFormatError(AnsamblError):
    """Mid-stream format change; analysis state has been reset."""


class ManifestError(AnsamblError):
    """Sample manifest unreadable or structurally broken."""


class LoopStateError(AnsamblError):
    """Loop recorder driven out of order (disarm before arm, empty take)."""


class LoopMemoryError(AnsamblError):
    """Layer store watermark exceeded; new layers are refused."""


class DeviceError(AnsamblError):
    """Audio device could not be opened or does not satisfy the config."""
