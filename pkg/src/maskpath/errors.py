"""Shared exception types."""


class FileFormatError(ValueError):
    """An input file exists but does not conform to its expected format."""
