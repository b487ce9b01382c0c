"""Exception types shared across the package."""


class RadarFieldError(Exception):
    """Base class for errors raised by this package."""


class InvalidDelayError(RadarFieldError, ValueError):
    """Round-trip delay is negative or does not fit inside one chirp."""


class DegenerateGeometryError(RadarFieldError, ValueError):
    """A scatterer or query position coincides with an antenna."""


class EmptyFieldError(RadarFieldError, ValueError):
    """An operation that needs a nonzero field got an all-zero one."""


class DatasetFormatError(RadarFieldError, ValueError):
    """A measurement file violates the binary format.

    ``offset`` is the byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class BadMagicError(DatasetFormatError):
    pass


class UnsupportedVersionError(DatasetFormatError):
    pass


class TruncatedFileError(DatasetFormatError):
    pass


class ConfigError(RadarFieldError, ValueError):
    """Config file syntax or schema violation, with source location."""

    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NonFiniteLossError(RadarFieldError, RuntimeError):
    """Training loss became NaN or infinite."""

    def __init__(self, step: int, value: float):
        super().__init__(f"non-finite loss {value!r} at step {step}")
        self.step = step
        self.value = value
