"""Exception types shared across the toolkit.

Every error carries a stable ``code`` string. The CLI prints ``<code>: <message>``
as a single line on stderr so callers can dispatch on the class without parsing
prose. ``ConfigurationError`` (and subclasses) map to exit code 2, everything
else to exit code 1.
"""


class SgiclError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class ConfigurationError(SgiclError):
    """Invalid run configuration, config file, or CLI arguments."""

    code = "configuration-error"


class UnknownTaskError(ConfigurationError):
    """Task name does not resolve to a built-in task or a task file."""

    code = "unknown-task"


class InvalidClassError(SgiclError):
    """A class id is outside the task's class set."""

    code = "invalid-class"


class TemplateResolutionError(SgiclError):
    """A template placeholder could not be resolved from the given item."""

    code = "template-resolution-error"


class InputError(SgiclError):
    """An operation precondition on caller-supplied data was violated."""

    code = "input-error"


class TransportError(SgiclError):
    """A network-level failure talking to a remote backend (retryable)."""

    code = "transport-error"

    def __init__(self, message: str, *, retryable: bool = True):
        super().__init__(message)
        self.retryable = retryable


class GenerationFailedError(SgiclError):
    """The backend could not produce a completion for a prompt."""

    code = "generation-failed"

    def __init__(self, message: str, *, prompt_fingerprint: str = ""):
        super().__init__(message)
        self.prompt_fingerprint = prompt_fingerprint


class DegenerateGenerationError(SgiclError):
    """More than half of a demonstration set's slots failed to generate."""

    code = "degenerate-generation"


class ScoringError(SgiclError):
    """The backend could not score a candidate continuation."""

    code = "scoring-error"

    def __init__(self, message: str, *, candidate: str = ""):
        super().__init__(message)
        self.candidate = candidate


class UndefinedSimilarityError(SgiclError):
    """Cosine similarity is undefined (zero vector)."""

    code = "undefined-similarity"


class DatasetRowError(SgiclError):
    """A dataset row failed to parse or its label is unmappable."""

    code = "dataset-row-error"

    def __init__(self, message: str, *, line: int = 0):
        super().__init__(message)
        self.line = line


class DatasetSchemaError(SgiclError):
    """A dataset file does not match the task's field schema."""

    code = "dataset-schema-error"


class CacheIntegrityError(SgiclError):
    """A cache entry is corrupt; the entry has been quarantined."""

    code = "cache-integrity-error"
