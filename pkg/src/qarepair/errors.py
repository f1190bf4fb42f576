"""Exception types shared across the package."""


class QARepairError(Exception):
    """Base class for all package errors."""


class InvalidInputError(QARepairError, ValueError):
    pass


class RetrievalUnavailableError(QARepairError):
    """A retrieval backend could not be reached after retries."""


class PayloadError(QARepairError):
    """A backend answered, but with a payload we cannot interpret."""


class ModelUnavailableError(QARepairError):
    """A model backend could not be reached after retries."""


class DraftUnavailableError(QARepairError):
    """Every rung of the drafting fallback chain failed at the transport level."""


class RefineUnavailableError(QARepairError):
    pass


class GradingUnavailableError(QARepairError):
    pass


class ConfigError(QARepairError):
    """Bad or incomplete run configuration (CLI exit code 2)."""
