"""Exception types shared across the claimcheck package."""

from __future__ import annotations


class ClaimcheckError(Exception):
    """Base class for all claimcheck errors."""


class UnrecognizedLabelError(ClaimcheckError, ValueError):
    """Raised when a raw label string is not in the closed label set."""

    def __init__(self, raw: str):
        super().__init__(f"unrecognized label: {raw!r}")
        self.raw = raw


class EmptyTextError(ClaimcheckError, ValueError):
    """Raised when text to embed is empty or carries no tokens."""


class RemoteUnavailableError(ClaimcheckError, RuntimeError):
    """Raised when a remote embedding endpoint cannot be reached."""


class InsufficientTrainingDataError(ClaimcheckError, ValueError):
    """Raised when the training sample is smaller than the cluster count."""


class DuplicateDocIdError(ClaimcheckError, ValueError):
    """Raised when a document id is added to the index twice."""


class UntrainedIndexError(ClaimcheckError, RuntimeError):
    """Raised when add/search is attempted before the index is trained."""


class CorruptIndexFileError(ClaimcheckError, RuntimeError):
    """Raised on magic/version/checksum mismatch while loading an index."""


class MalformedFileError(ClaimcheckError, ValueError):
    """Raised when a corpus file does not match the documented schema."""


class TooFewRecordsError(ClaimcheckError, ValueError):
    """Raised when a corpus is too small to split."""


class CompletionTimeoutError(ClaimcheckError, RuntimeError):
    """Raised when a completion provider exceeds its timeout budget."""


class ProviderError(ClaimcheckError, RuntimeError):
    """Raised when a completion provider fails."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ParseFailureError(ClaimcheckError, ValueError):
    """Raised when a model completion has no parseable JSON assessment."""


class ApiUnavailableError(ClaimcheckError, RuntimeError):
    """Raised when the external fact-check service cannot be reached."""


class QuotaExceededError(ClaimcheckError, RuntimeError):
    """Raised when the external fact-check service rate-limits us."""


class LeakageError(ClaimcheckError, RuntimeError):
    """Raised when a test claim is found in the knowledge base."""


class ConfigError(ClaimcheckError, ValueError):
    """Raised on invalid configuration files or values."""
