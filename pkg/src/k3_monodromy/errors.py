"""Exception hierarchy shared by all modules.

The CLI maps ``UsageError`` to exit code 2 and every other ``K3MonodromyError`` to exit
code 1.
"""


class K3MonodromyError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(K3MonodromyError, ValueError):
    """Arguments have the wrong shape (order, degree or size mismatch)."""


class UnsupportedError(UsageError):
    """The requested size or configuration is outside what is implemented."""


class DomainError(K3MonodromyError, ValueError):
    """Input is mathematically invalid for the requested operation."""


class InconclusiveError(DomainError):
    """Truncation was too small to decide the answer."""

    def __init__(self, message: str, order: int) -> None:
        super().__init__(f"{message} (inconclusive at order {order})")
        self.order = order


class InternalInconsistencyError(K3MonodromyError):
    """A verification that must hold by construction failed."""


class PathFailureError(DomainError):
    """Too many homotopy paths failed to reach the target system."""

    def __init__(self, message: str, path_log: list[dict[str, object]]) -> None:
        super().__init__(message)
        self.path_log = path_log


class LoopRejectedError(DomainError):
    """Endpoint matching of a monodromy loop failed even after re-tracking."""
