"""Rubric-grounded retrieval-augmented grading engine with human review."""

from .agent import (
    Assessment,
    AssessmentStatus,
    AuditEntry,
    Grader,
    LLMProviderConfig,
    LLMProviderKind,
    ProviderRequest,
    ReviewAction,
    ScriptedProvider,
    Submission,
    SubmissionStore,
    assemble_prompt,
    make_submission,
    parse_agent_output,
)
from .config import ServiceConfig, load_config
from .corpus import CorpusStore, DocType, Document, Provenance, ingest_document, scan_inbox
from .embedding import (
    EmbeddingProviderConfig,
    EmbeddingProviderKind,
    EmbeddingVector,
    cosine_similarity,
    embed,
    reference_embedding,
)
from .engine import BatchSummary, Engine
from .reliability import (
    BlandAltman,
    PairedScores,
    ReliabilityReport,
    bin_to_bands,
    bland_altman,
    cohens_kappa,
    icc_2_1,
    mae_rmse,
    pearson_r,
    reliability_report,
)
from .review import AssessmentStore, ReviewService
from .rubric import (
    Band,
    BandLabel,
    Criterion,
    CriterionScore,
    Rubric,
    band_for_percent,
    default_rubric,
    load_rubric,
    validate_rubric,
    weighted_total,
)
from .vector_index import QueryFilter, RetrievalResult, VectorIndex

__version__ = "0.1.0"

__all__ = [
    "Assessment",
    "AssessmentStatus",
    "AssessmentStore",
    "AuditEntry",
    "Band",
    "BandLabel",
    "BatchSummary",
    "BlandAltman",
    "CorpusStore",
    "Criterion",
    "CriterionScore",
    "DocType",
    "Document",
    "EmbeddingProviderConfig",
    "EmbeddingProviderKind",
    "EmbeddingVector",
    "Engine",
    "Grader",
    "LLMProviderConfig",
    "LLMProviderKind",
    "PairedScores",
    "Provenance",
    "ProviderRequest",
    "QueryFilter",
    "ReliabilityReport",
    "RetrievalResult",
    "ReviewAction",
    "ReviewService",
    "Rubric",
    "ScriptedProvider",
    "ServiceConfig",
    "Submission",
    "SubmissionStore",
    "VectorIndex",
    "assemble_prompt",
    "band_for_percent",
    "bin_to_bands",
    "bland_altman",
    "cohens_kappa",
    "cosine_similarity",
    "default_rubric",
    "embed",
    "icc_2_1",
    "ingest_document",
    "load_config",
    "load_rubric",
    "mae_rmse",
    "make_submission",
    "parse_agent_output",
    "pearson_r",
    "reference_embedding",
    "reliability_report",
    "scan_inbox",
    "validate_rubric",
    "weighted_total",
]
