"""Exception types shared across the package."""


class SedrecError(Exception):
    """Base class for all package errors."""


class InputDataError(SedrecError):
    """User-supplied input is missing, malformed, or fails validation.

    CLI maps this to exit code 2.
    """


class SnapshotError(InputDataError):
    """Graph snapshot file is unreadable: bad magic, wrong version, truncated."""


class UnknownNodeError(SedrecError):
    """A node identifier or index does not exist in the graph."""
