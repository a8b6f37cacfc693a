"""Package-level exception types."""


class MutoError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(MutoError):
    """A data file could not be parsed (message carries the line number)."""


class ConfigError(MutoError):
    """A run configuration failed validation (message names the field)."""
