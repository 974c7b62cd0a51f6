"""Exception types shared across the pipeline."""


class EdutriageError(Exception):
    """Base class for all errors raised by this package."""


# --- forge client ---

class AuthError(EdutriageError):
    """Credential rejected by the forge. Not retryable."""


class RateLimitError(EdutriageError):
    """Request budget exhausted; carries the reset time when known."""

    def __init__(self, message: str, reset_at: float | None = None):
        super().__init__(message)
        self.reset_at = reset_at


class TransientNetworkError(EdutriageError):
    """Connection/5xx style failure worth retrying."""


class MalformedResponseError(EdutriageError):
    """Forge payload did not match the expected schema."""


class NotFoundError(EdutriageError):
    """Repository disappeared between search and fetch."""


# --- store ---

class StorageError(EdutriageError):
    """Unreadable/unwritable corpus files, or a corrupt record line."""


class LockTimeoutError(StorageError):
    """Could not obtain the stage-file writer lock within the bound."""


# --- LLM providers ---

class ProviderError(EdutriageError):
    """Provider call failed after transport retries were exhausted."""


class BudgetExceededError(EdutriageError):
    """Configured provider call cap was hit."""


# --- analytics / sampling ---

class EmptyInputError(EdutriageError):
    """An operation that requires data got none."""


class MismatchedPopulationsError(EdutriageError):
    """Two annotation rounds cover different repo sets."""

    def __init__(self, message: str, difference: set[str] | None = None):
        super().__init__(message)
        self.difference = difference or set()


class EmptyPopulationError(EdutriageError):
    """Sampling requested from an empty flagged set."""


class NotInSampleError(EdutriageError):
    """Verdict recorded against a repo outside the active sample."""
