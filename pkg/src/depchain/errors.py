"""Exception hierarchy shared across the package."""


class DepchainError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(DepchainError):
    """Malformed CoNLL-U input, invalid tree structure, or bad event records."""


class EmbeddingError(DepchainError):
    """Malformed embedding text file."""


class CheckpointError(DepchainError):
    """Unreadable or inconsistent model checkpoint."""


class TrainingError(DepchainError):
    """Training aborted (non-finite loss, bad configuration)."""
