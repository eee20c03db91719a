"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems exit 3, violated internal invariants exit 4.
"""


class FaceRestoreError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(FaceRestoreError):
    """Invalid parameter combination, missing path, or bad sweep value."""


class DataError(FaceRestoreError):
    """Unreadable or malformed input data."""


class ParseError(DataError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvariantError(FaceRestoreError):
    """An internal consistency check failed."""
