"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: configuration and input problems
exit with 2, artifact/manifest mismatches with 3, anything else with 1.
"""

from __future__ import annotations


class ProsocialError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ProsocialError):
    """Bad configuration value, missing file, or invalid CLI override."""


class ParseError(ProsocialError):
    """A corrupt input line. Carries the 1-based line number when known."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SchemaError(ProsocialError):
    """A record is well-formed but missing required fields."""


class ArtifactError(ProsocialError):
    """A saved model or report does not match the expected manifest."""


class TrainingError(ProsocialError):
    """Model fitting cannot proceed (degenerate labels, empty corpus)."""


class PanelError(ProsocialError):
    """A metric could not be computed. Names the failing metric."""

    def __init__(self, metric: str, message: str):
        super().__init__(f"metric '{metric}': {message}")
        self.metric = metric


class NumericError(ProsocialError):
    """Non-finite input or a statistic that is undefined for the data."""


class ToxicityClientError(ProsocialError):
    """The scoring endpoint rejected a request (non-retryable)."""


class ToxicityProtocolError(ProsocialError):
    """The scoring endpoint returned a malformed response."""
