"""Exception types shared across the package."""

from __future__ import annotations


class D2CError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(D2CError):
    """Input data violates a documented precondition or invariant."""


class ParseError(D2CError):
    """A serialized input could not be parsed.

    `offset` is a byte offset into the input when known, `line` a 1-based
    line number (used by the HTML parser).
    """

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.line = line


class SchemaNotFoundError(D2CError):
    """No JSON object could be located in a model response."""


class SchemaFormatError(D2CError):
    """A JSON object was found but does not describe a valid layout schema.

    Carries the validation report (or a synthesized one for structural
    problems) so callers can inspect the individual violations.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class MalformedVerdictError(D2CError):
    """A judge response contains no parseable WINNER line."""


class BackendError(D2CError):
    """A model backend failed (network, HTTP status, or response shape)."""


class ReplayMissError(BackendError):
    """A replay cassette has no recording for the requested fingerprint."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded response for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class StageError(D2CError):
    """A pipeline stage failed; `stage` names it, `__cause__` holds the original."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
