"""Exception taxonomy shared across the pipeline.

Every error carries a short machine-readable ``code`` so the CLI and the
HTTP service can map failures onto their respective error surfaces
(``RF-ERR:`` lines and JSON error bodies) without string matching.
"""


class RemflowError(Exception):
    code = "error"

    def __init__(self, message: str, detail: str = ""):
        super().__init__(message)
        self.message = message
        self.detail = detail


class ValidationError(RemflowError):
    """Bad input: out-of-range parameter, malformed file, missing path."""

    code = "validation"


class ShapeMismatchError(ValidationError):
    code = "shape-mismatch"


class GenerationFailedError(RemflowError):
    """Rejection sampling exhausted its retry budget for a constraint."""

    code = "generation-failed"

    def __init__(self, message: str, constraint: str):
        super().__init__(message, detail=constraint)
        self.constraint = constraint


class UndefinedMetricError(RemflowError):
    """Metric has no value for the given inputs (e.g. empty foreground)."""

    code = "undefined-metric"


class MissingPlaceholderError(ValidationError):
    code = "missing-placeholder"

    def __init__(self, placeholder: str):
        super().__init__(f"prompt parameter missing: {placeholder!r}", detail=placeholder)
        self.placeholder = placeholder


class UnknownProviderError(ValidationError):
    code = "unknown-provider"


class ProviderTransientError(RemflowError):
    """Retryable provider failure (timeout, 5xx, rate limit)."""

    code = "provider-transient"


class ProviderUnavailableError(RemflowError):
    """Provider still failing after the retry budget was exhausted."""

    code = "provider-unavailable"


class ProviderProtocolError(RemflowError):
    """Provider answered, but the payload violates the wire contract."""

    code = "provider-protocol"

    def __init__(self, message: str, raw_response_id: str = ""):
        super().__init__(message, detail=raw_response_id)
        self.raw_response_id = raw_response_id


class CheckpointError(RemflowError):
    code = "checkpoint"


class TrainingDivergedError(RemflowError):
    """A loss term became non-finite; names the offending term."""

    code = "training-diverged"

    def __init__(self, term: str, value: float):
        super().__init__(f"non-finite loss term {term!r}: {value}", detail=term)
        self.term = term


class WrongStateError(RemflowError):
    """Session operation not allowed in the current state."""

    code = "wrong-state"


class NotFoundError(RemflowError):
    code = "not-found"
