"""Exception taxonomy shared across the toolkit.

Library code raises these and never calls sys.exit; the CLI maps them to
exit codes (see cli module).
"""

from __future__ import annotations


class PrmkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PrmkitError):
    """Input data or configuration violates a documented contract."""


class UsageError(PrmkitError):
    """An API or CLI entry point was invoked incorrectly."""


class ParseError(ValidationError):
    """Structured text could not be parsed; names the offending field."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class TransportError(PrmkitError):
    """A backend request failed at the transport level after retries."""

    def __init__(self, message: str, *, category: str = "transport", retries: int = 0) -> None:
        super().__init__(message)
        self.category = category
        self.retries = retries


class ProtocolError(PrmkitError):
    """A backend request or reply violated the wire contract (never retried)."""


class MetricUndefinedError(PrmkitError):
    """A metric has no defined value on the given inputs."""

    def __init__(self, side: str, message: str) -> None:
        super().__init__(f"{side}: {message}")
        self.side = side


class SearchError(PrmkitError):
    """Guided search could not continue; carries any partial transcript."""

    def __init__(self, message: str, *, partial_transcript=None) -> None:
        super().__init__(message)
        self.partial_transcript = partial_transcript
