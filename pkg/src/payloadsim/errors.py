"""Exception types shared across the payload simulator."""


class PayloadSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(PayloadSimError):
    """Invalid configuration value or malformed scenario file."""


class InvalidTimeError(PayloadSimError):
    """Timestamp predates the orbit epoch."""


class InvalidStepError(PayloadSimError):
    """Thermal integration step outside the stability bound."""


class InvalidImageError(PayloadSimError):
    """Image with zero or negative dimensions."""


class FormatError(PayloadSimError):
    """Malformed container: bad magic or truncated header."""


class SegmentCorruptError(FormatError):
    """Undecodable segment payload; carries the segment index."""

    def __init__(self, segment_index: int, message: str = ""):
        self.segment_index = segment_index
        super().__init__(message or f"corrupt segment {segment_index}")


class InvalidComparisonError(PayloadSimError):
    """Image comparison with mismatched shapes."""


class InvalidChannelError(PayloadSimError):
    """Multiplexer channel index out of range."""


class NoSensorError(PayloadSimError):
    """Capture requested on an empty multiplexer channel."""


class PayloadInactiveError(PayloadSimError):
    """Capture requested while the payload is gated off."""


class StorageFullError(PayloadSimError):
    """Asset does not fit in the storage quota."""


class DuplicateEntryError(PayloadSimError):
    """Logical name already present in the integrity manifest."""


class RejectedUploadError(PayloadSimError):
    """Uplinked repair content does not match the stored digest."""


class RejectedUplinkError(PayloadSimError):
    """Uplink submission exceeds the daily byte budget."""


class FrameError(PayloadSimError):
    """Base class for link-frame decode failures."""


class BadSyncError(FrameError):
    """Frame does not start with the sync marker."""


class CrcMismatchError(FrameError):
    """Frame checksum does not verify."""


class TruncatedFrameError(FrameError):
    """Frame shorter than its declared length."""


class ModelFormatError(PayloadSimError):
    """Model file or feature vector with the wrong dimensions."""


class CommandError(PayloadSimError):
    """Operator command rejected: unknown type, bad field, or bad target."""
