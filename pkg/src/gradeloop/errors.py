"""Error hierarchy shared across the engine.

Every error exposes a stable machine-readable ``code`` (the class name) and an
HTTP status used by the API layer. Raising sites keep messages human-oriented;
callers that need to branch should match on the class, not the text.
"""

from __future__ import annotations


class GradeLoopError(Exception):
    """Base class for all engine errors."""

    http_status = 400

    @property
    def code(self) -> str:
        return type(self).__name__


# --- corpus / ingestion ---


class EmptyDocument(GradeLoopError):
    """Document text was empty after trimming."""


class UnknownDocType(GradeLoopError):
    """Document type is not one of the supported values."""


class IoFailure(GradeLoopError):
    """Filesystem read or write failed."""

    http_status = 500


# --- embeddings ---


class EmptyText(GradeLoopError):
    """Text produced no tokens, so no embedding can be computed."""


class RemoteUnavailable(GradeLoopError):
    """Remote embedding endpoint failed after all retries."""

    http_status = 502


class DimensionMismatch(GradeLoopError):
    """Vector dimensionalities disagree."""


# --- vector index ---


class MissingEmbedding(GradeLoopError):
    """Document offered to the index carries no embedding."""


class CorruptIndex(GradeLoopError):
    """Index file failed its integrity check."""

    http_status = 500


# --- rubric ---


class WeightSumInvalid(GradeLoopError):
    """Criterion weights do not sum to 100."""


class BandCoverageInvalid(GradeLoopError):
    """Bands overlap, leave gaps, or do not span 0..100."""


class DuplicateCriterion(GradeLoopError):
    """Two criteria share an id."""


class PercentOutOfRange(GradeLoopError):
    """Percent score falls outside 0..100."""


class MissingCriterionScore(GradeLoopError):
    """A rubric criterion has no score."""


class ExtraCriterionScore(GradeLoopError):
    """A score names a criterion absent from the rubric, or repeats one."""


class BandPercentMismatch(GradeLoopError):
    """Percent lies outside the range of the named band."""

    def __init__(self, message: str, criterion_id: str | None = None) -> None:
        super().__init__(message)
        self.criterion_id = criterion_id


# --- agent ---


class EvidenceMismatch(GradeLoopError):
    """Evidence results and evidence texts are not aligned."""


class NoJsonObject(GradeLoopError):
    """Model output contains no parseable JSON object."""


class SchemaViolation(GradeLoopError):
    """Model output parsed but violates the output contract."""

    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class UnknownCriterion(GradeLoopError):
    """Model output names a criterion the rubric does not define."""


class ProviderUnavailable(GradeLoopError):
    """Language model provider failed or was exhausted."""

    http_status = 502


class UnparseableAfterRepairs(GradeLoopError):
    """Model output stayed invalid through every repair attempt."""

    http_status = 502


# --- review ---


class NotFound(GradeLoopError):
    """Referenced entity does not exist."""

    http_status = 404


class InvalidState(GradeLoopError):
    """Requested transition is not legal from the current status."""

    http_status = 409


class EmptyReason(GradeLoopError):
    """Rejection requires a non-empty reason."""


class NoDecidedAssessments(GradeLoopError):
    """No approved or rejected assessments exist in the requested scope."""


# --- statistics ---


class LengthMismatch(GradeLoopError):
    """Paired sequences differ in length."""


class DegenerateMarginals(GradeLoopError):
    """Chance agreement is 1, so kappa is undefined."""


class InsufficientData(GradeLoopError):
    """Too few subjects or raters for the requested statistic."""


class ZeroVariance(GradeLoopError):
    """A statistic is undefined because a sequence has zero variance."""


class EmptyInput(GradeLoopError):
    """Statistic requested over an empty sequence."""


# --- server ---


class AuthFailure(GradeLoopError):
    """Missing or wrong API token."""

    http_status = 401


class BindFailure(GradeLoopError):
    """Server could not bind its listen address."""

    http_status = 500


class StoreLoadFailure(GradeLoopError):
    """A persistent store could not be loaded at startup."""

    http_status = 500
