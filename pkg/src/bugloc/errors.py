"""Exception types shared across the package."""
from __future__ import annotations


class BuglocError(Exception):
    """Base class for all package errors."""


class ConfigError(BuglocError):
    """Invalid or incomplete run configuration."""


class GitError(BuglocError):
    """Git history could not be read."""


class IngestError(BuglocError):
    """Issue export could not be parsed."""


class ProviderError(BuglocError):
    """An embedding provider failed after exhausting retries."""


class StoreError(BuglocError):
    """Embedding store is missing, corrupt, or inconsistent."""


class StoreBuildError(StoreError):
    """A store build/refresh left failures behind.

    Carries the valid partial store and the item ids that still need
    embedding so the caller can persist and resume.
    """

    def __init__(self, message: str, partial_store, failed_ids: list[str]):
        super().__init__(message)
        self.partial_store = partial_store
        self.failed_ids = failed_ids
