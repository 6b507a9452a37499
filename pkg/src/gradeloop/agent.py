"""Grading agent: prompt assembly, model output parsing, and the grade loop.

The agent retrieves the top-k most similar corpus documents for an essay,
builds a prompt grounded in the rubric and that evidence, and asks a language
model provider for per-criterion scores. Invalid model output triggers a
bounded number of repair re-prompts; the overall percent is always recomputed
engine-side from the per-criterion scores.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from .embedding import EmbeddingVector
from .errors import (
    BandPercentMismatch,
    EvidenceMismatch,
    NoJsonObject,
    NotFound,
    ProviderUnavailable,
    SchemaViolation,
    UnknownCriterion,
    UnparseableAfterRepairs,
)
from .rubric import BandLabel, CriterionScore, Rubric, percent_in_band, weighted_total
from .storage import append_record, now_utc_iso, read_records
from .vector_index import RetrievalResult, VectorIndex

EXPECTED_WORDS_LO = 800
EXPECTED_WORDS_HI = 1000

OUTPUT_SCHEMA = (
    '{"criteria":[{"criterion_id":"<id>","band":"<Excellent|Good|Satisfactory|NeedsImprovement>",'
    '"percent":<number>,"comment":"<text>"}],"overall_comment":"<text>"}'
)

SYSTEM_TEXT = (
    "You are an assessment assistant grading one student essay against a weighted rubric. "
    "Ground every band, percent, and comment only in the rubric and the evidence documents "
    "quoted in the prompt. Respond with exactly one JSON object and nothing else."
)


# --- submissions ---


@dataclass(frozen=True)
class Submission:
    id: str
    student_ref: str
    essay_text: str
    word_count: int
    submitted_at: str
    cohort: str | None = None

    def __post_init__(self) -> None:
        if not self.essay_text.strip():
            raise ValueError("essay text is empty")
        if self.word_count != len(self.essay_text.split()):
            raise ValueError("word_count does not match the essay text")

    @property
    def length_flag(self) -> bool:
        """True when the essay falls outside the expected length window."""
        return not EXPECTED_WORDS_LO <= self.word_count <= EXPECTED_WORDS_HI

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "student_ref": self.student_ref,
            "essay_text": self.essay_text,
            "word_count": self.word_count,
            "submitted_at": self.submitted_at,
            "cohort": self.cohort,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "Submission":
        return cls(
            id=str(raw["id"]),
            student_ref=str(raw["student_ref"]),
            essay_text=str(raw["essay_text"]),
            word_count=int(raw["word_count"]),
            submitted_at=str(raw["submitted_at"]),
            cohort=raw.get("cohort"),
        )


def make_submission(
    student_ref: str,
    essay_text: str,
    cohort: str | None = None,
    submission_id: str | None = None,
) -> Submission:
    """Build a submission, deriving word count and timestamp."""
    return Submission(
        id=submission_id or f"sub-{uuid.uuid4().hex[:12]}",
        student_ref=student_ref,
        essay_text=essay_text,
        word_count=len(essay_text.split()),
        submitted_at=now_utc_iso(),
        cohort=cohort,
    )


class SubmissionStore:
    """Append-structured submission store, latest record wins."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        subs: dict[str, Submission] = {}
        for raw in read_records(self.path):
            sub = Submission.from_record(raw)
            subs[sub.id] = sub
        self._subs = subs

    def __len__(self) -> int:
        return len(self._subs)

    def get(self, submission_id: str) -> Submission | None:
        return self._subs.get(submission_id)

    def require(self, submission_id: str) -> Submission:
        sub = self._subs.get(submission_id)
        if sub is None:
            raise NotFound(f"submission {submission_id!r} does not exist")
        return sub

    def list(self, cohort: str | None = None) -> list[Submission]:
        subs = list(self._subs.values())
        if cohort is not None:
            subs = [s for s in subs if s.cohort == cohort]
        return subs

    def add(self, submission: Submission) -> None:
        with self._lock:
            append_record(self.path, submission.to_record())
            subs = dict(self._subs)
            subs[submission.id] = submission
            self._subs = subs


# --- assessments ---


class AssessmentStatus(str, Enum):
    DRAFT = "draft"
    PENDING_REVIEW = "pending_review"
    APPROVED = "approved"
    REJECTED = "rejected"


class ReviewAction(str, Enum):
    SUBMITTED = "submitted"
    APPROVED = "approved"
    EDITED = "edited"
    REJECTED = "rejected"
    REGENERATION_REQUESTED = "regeneration_requested"


@dataclass(frozen=True)
class AuditEntry:
    at: str
    reviewer_id: str
    action: ReviewAction
    note: str | None = None
    diff_summary: str | None = None

    def to_record(self) -> dict:
        return {
            "at": self.at,
            "reviewer_id": self.reviewer_id,
            "action": self.action.value,
            "note": self.note,
            "diff_summary": self.diff_summary,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "AuditEntry":
        return cls(
            at=str(raw["at"]),
            reviewer_id=str(raw["reviewer_id"]),
            action=ReviewAction(raw["action"]),
            note=raw.get("note"),
            diff_summary=raw.get("diff_summary"),
        )


@dataclass(frozen=True)
class Assessment:
    id: str
    submission_id: str
    rubric_id: str
    criterion_scores: tuple[CriterionScore, ...]
    overall_comment: str
    total_percent: float
    evidence: tuple[RetrievalResult, ...]
    generated_at: str
    model_label: str
    status: AssessmentStatus
    review_trail: tuple[AuditEntry, ...] = ()

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "submission_id": self.submission_id,
            "rubric_id": self.rubric_id,
            "criterion_scores": [
                {
                    "criterion_id": s.criterion_id,
                    "band": s.band.value,
                    "percent": s.percent,
                    "comment": s.comment,
                }
                for s in self.criterion_scores
            ],
            "overall_comment": self.overall_comment,
            "total_percent": self.total_percent,
            "evidence": [r.to_record() for r in self.evidence],
            "generated_at": self.generated_at,
            "model_label": self.model_label,
            "status": self.status.value,
            "review_trail": [e.to_record() for e in self.review_trail],
        }

    @classmethod
    def from_record(cls, raw: dict) -> "Assessment":
        return cls(
            id=str(raw["id"]),
            submission_id=str(raw["submission_id"]),
            rubric_id=str(raw["rubric_id"]),
            criterion_scores=tuple(
                CriterionScore(
                    criterion_id=str(s["criterion_id"]),
                    band=BandLabel(s["band"]),
                    percent=float(s["percent"]),
                    comment=str(s["comment"]),
                )
                for s in raw["criterion_scores"]
            ),
            overall_comment=str(raw["overall_comment"]),
            total_percent=float(raw["total_percent"]),
            evidence=tuple(RetrievalResult.from_record(r) for r in raw["evidence"]),
            generated_at=str(raw["generated_at"]),
            model_label=str(raw["model_label"]),
            status=AssessmentStatus(raw["status"]),
            review_trail=tuple(AuditEntry.from_record(e) for e in raw.get("review_trail", [])),
        )


# --- prompt assembly ---


class SectionTag(str, Enum):
    RUBRIC = "rubric"
    EVIDENCE = "evidence"
    ESSAY = "essay"
    OUTPUT_CONTRACT = "output_contract"


@dataclass(frozen=True)
class PromptSection:
    tag: SectionTag
    heading: str
    body: str


@dataclass(frozen=True)
class Prompt:
    system_text: str
    sections: tuple[PromptSection, ...]

    def render(self) -> str:
        return "\n\n".join(f"## {s.heading}\n{s.body}" for s in self.sections)


def _rubric_sections(rubric: Rubric) -> list[PromptSection]:
    sections = []
    for criterion in rubric.criteria:
        lines = [
            f"{band.label.value} ({band.lo_percent:g}-{band.hi_percent:g}%): {band.descriptor}"
            for band in sorted(criterion.bands, key=lambda b: -b.lo_percent)
        ]
        sections.append(
            PromptSection(
                tag=SectionTag.RUBRIC,
                heading=f"Criterion {criterion.id}: {criterion.name} (weight {criterion.weight_percent:g}%)",
                body="\n".join(lines),
            )
        )
    return sections


def assemble_prompt(
    submission: Submission,
    rubric: Rubric,
    evidence: Sequence[RetrievalResult],
    evidence_texts: Sequence[str],
) -> Prompt:
    """Deterministic prompt: rubric, evidence (best first), essay, contract."""
    if len(evidence) != len(evidence_texts):
        raise EvidenceMismatch(f"{len(evidence)} results but {len(evidence_texts)} texts")
    pairs = sorted(zip(evidence, evidence_texts), key=lambda p: (-p[0].similarity, p[0].doc_id))
    sections = _rubric_sections(rubric)
    for result, text in pairs:
        sections.append(
            PromptSection(
                tag=SectionTag.EVIDENCE,
                heading=(
                    f"Evidence [{result.doc_type.value}] {result.doc_id} "
                    f"(similarity {result.similarity:.4f})"
                ),
                body=text,
            )
        )
    sections.append(
        PromptSection(
            tag=SectionTag.ESSAY,
            heading=f"Student essay (submission {submission.id}, {submission.word_count} words)",
            body=submission.essay_text,
        )
    )
    sections.append(
        PromptSection(
            tag=SectionTag.OUTPUT_CONTRACT,
            heading="Output contract",
            body=(
                "Respond with a single JSON object matching this schema exactly:\n"
                f"{OUTPUT_SCHEMA}\n"
                "Emit one criteria entry per rubric criterion, in rubric order. "
                "The percent must lie inside the chosen band's range. "
                "Do not wrap the object in markdown fences or add commentary."
            ),
        )
    )
    return Prompt(system_text=SYSTEM_TEXT, sections=tuple(sections))


# --- model output parsing ---


@dataclass(frozen=True)
class ParsedOutput:
    criterion_scores: tuple[CriterionScore, ...]
    overall_comment: str


def _first_json_object(raw: str) -> dict:
    decoder = json.JSONDecoder()
    pos = raw.find("{")
    while pos != -1:
        try:
            obj, _end = decoder.raw_decode(raw, pos)
        except json.JSONDecodeError:
            pos = raw.find("{", pos + 1)
            continue
        if isinstance(obj, dict):
            return obj
        pos = raw.find("{", pos + 1)
    raise NoJsonObject("model output contains no JSON object")


def parse_agent_output(raw: str, rubric: Rubric) -> ParsedOutput:
    """Extract and validate the model's scores against the output contract."""
    obj = _first_json_object(raw)
    criteria = obj.get("criteria")
    if not isinstance(criteria, list):
        raise SchemaViolation("criteria", "missing or not a list")
    expected = len(rubric.criteria)
    if len(criteria) != expected:
        raise SchemaViolation("criteria", f"expected {expected} entries, got {len(criteria)}")

    known = {c.id for c in rubric.criteria}
    scores: dict[str, CriterionScore] = {}
    for pos, entry in enumerate(criteria):
        if not isinstance(entry, dict):
            raise SchemaViolation("criteria", f"entry {pos} is not an object")
        criterion_id = entry.get("criterion_id")
        if not isinstance(criterion_id, str):
            raise SchemaViolation("criterion_id", f"entry {pos} has no criterion_id string")
        if criterion_id not in known:
            raise UnknownCriterion(f"criterion {criterion_id!r} is not in the rubric")
        if criterion_id in scores:
            raise SchemaViolation("criteria", f"duplicate entry for {criterion_id!r}")
        band_raw = entry.get("band")
        try:
            band = BandLabel(band_raw)
        except ValueError:
            raise SchemaViolation("band", f"{band_raw!r} is not a band label") from None
        percent = entry.get("percent")
        if isinstance(percent, bool) or not isinstance(percent, (int, float)):
            raise SchemaViolation("percent", f"{criterion_id}: percent is not a number")
        if not 0.0 <= float(percent) <= 100.0:
            raise SchemaViolation("percent", f"{criterion_id}: {percent} outside 0..100")
        comment = entry.get("comment")
        if not isinstance(comment, str) or not comment.strip():
            raise SchemaViolation("comment", f"{criterion_id}: comment is missing or empty")
        scores[criterion_id] = CriterionScore(
            criterion_id=criterion_id,
            band=band,
            percent=float(percent),
            comment=comment,
        )

    overall = obj.get("overall_comment")
    if not isinstance(overall, str) or not overall.strip():
        raise SchemaViolation("overall_comment", "missing or empty")

    ordered: list[CriterionScore] = []
    for criterion in rubric.criteria:
        score = scores[criterion.id]
        if not percent_in_band(criterion.bands, score.band, score.percent):
            raise BandPercentMismatch(
                f"{criterion.id}: percent {score.percent:g} is outside band {score.band.value}",
                criterion_id=criterion.id,
            )
        ordered.append(score)
    return ParsedOutput(criterion_scores=tuple(ordered), overall_comment=overall)


# --- providers ---


@dataclass(frozen=True)
class ProviderRequest:
    system: str
    prompt: str
    temperature: float
    submission_id: str


class LLMProvider(Protocol):
    label: str

    def generate(self, request: ProviderRequest) -> str: ...


class LLMProviderKind(str, Enum):
    SCRIPTED = "scripted"
    REMOTE = "remote"


@dataclass(frozen=True)
class LLMProviderConfig:
    kind: LLMProviderKind = LLMProviderKind.SCRIPTED
    script_path: Path | None = None
    endpoint_url: str | None = None
    temperature: float = 0.0
    max_output_repair_attempts: int = 2
    timeout_seconds: float = 30.0
    auth_token_env_var: str | None = None

    def __post_init__(self) -> None:
        if self.max_output_repair_attempts < 0:
            raise ValueError("max_output_repair_attempts must be >= 0")
        if self.kind is LLMProviderKind.REMOTE and not self.endpoint_url:
            raise ValueError("remote LLM provider needs endpoint_url")


class ScriptedProvider:
    """Deterministic test double: canned responses per submission id.

    The script maps submission ids to ordered response lists; the key ``*``
    holds fallback responses shared by any submission without its own entry.
    Each call consumes one response.
    """

    label = "scripted"

    def __init__(self, script: dict[str, list[str]] | Path | str) -> None:
        if isinstance(script, (str, Path)):
            script = json.loads(Path(script).read_text(encoding="utf-8"))
        if not isinstance(script, dict):
            raise ValueError("script must map submission ids to response lists")
        self._responses = {key: list(value) for key, value in script.items()}
        self._lock = threading.Lock()
        self.calls: list[ProviderRequest] = []

    def generate(self, request: ProviderRequest) -> str:
        with self._lock:
            self.calls.append(request)
            queue = self._responses.get(request.submission_id)
            if not queue:
                queue = self._responses.get("*")
            if not queue:
                raise ProviderUnavailable(
                    f"scripted provider has no response left for {request.submission_id!r}"
                )
            return queue.pop(0)


class RemoteLLMProvider:
    """HTTP chat provider: posts system, prompt, and temperature; reads text."""

    def __init__(self, config: LLMProviderConfig, *, transport: httpx.BaseTransport | None = None) -> None:
        if config.kind is not LLMProviderKind.REMOTE:
            raise ValueError("RemoteLLMProvider requires a remote provider config")
        self.config = config
        self.label = f"remote:{config.endpoint_url}"
        self._client = httpx.Client(transport=transport, timeout=config.timeout_seconds)

    def _headers(self) -> dict[str, str]:
        import os

        headers = {"content-type": "application/json"}
        if self.config.auth_token_env_var:
            token = os.environ.get(self.config.auth_token_env_var)
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def generate(self, request: ProviderRequest) -> str:
        try:
            response = self._client.post(
                self.config.endpoint_url or "",
                json={
                    "system": request.system,
                    "prompt": request.prompt,
                    "temperature": request.temperature,
                },
                headers=self._headers(),
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"chat endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailable(f"chat endpoint returned {response.status_code}")
        try:
            text = response.json()["text"]
        except (ValueError, KeyError) as exc:
            raise ProviderUnavailable(f"chat endpoint returned an unusable body: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderUnavailable("chat endpoint returned a non-string text field")
        return text

    def close(self) -> None:
        self._client.close()


def build_llm_provider(config: LLMProviderConfig, **kwargs) -> LLMProvider:
    if config.kind is LLMProviderKind.SCRIPTED:
        if config.script_path is None:
            raise ValueError("scripted LLM provider needs script_path")
        return ScriptedProvider(config.script_path)
    return RemoteLLMProvider(config, **kwargs)


# --- the grade loop ---


class Embedder(Protocol):
    dims: int

    def embed(self, text: str) -> EmbeddingVector: ...


class AssessmentSink(Protocol):
    def add(self, assessment: Assessment) -> None: ...


def _correction_text(error: Exception) -> str:
    if isinstance(error, BandPercentMismatch) and error.criterion_id:
        return (
            f"Your previous response was invalid: criterion {error.criterion_id!r} has a percent "
            "outside its chosen band's range. Re-emit the full JSON object with the band and "
            "percent consistent for every criterion."
        )
    return (
        f"Your previous response was invalid ({error}). Re-emit a single JSON object that "
        "matches the output contract exactly."
    )


class Grader:
    """Runs the retrieve, prompt, parse, repair, and persist cycle."""

    def __init__(
        self,
        *,
        rubric: Rubric,
        index: VectorIndex,
        embedder: Embedder,
        provider: LLMProvider,
        assessments: AssessmentSink,
        temperature: float = 0.0,
        max_output_repair_attempts: int = 2,
        default_k: int = 5,
    ) -> None:
        self.rubric = rubric
        self.index = index
        self.embedder = embedder
        self.provider = provider
        self.assessments = assessments
        self.temperature = temperature
        self.max_output_repair_attempts = max_output_repair_attempts
        self.default_k = default_k

    def grade(self, submission: Submission, k: int | None = None) -> Assessment:
        """Grade one submission; persists the assessment before returning."""
        top_k = self.default_k if k is None else k
        query = self.embedder.embed(submission.essay_text)
        results = self.index.query(query, top_k)
        texts = []
        for result in results:
            doc = self.index.get(result.doc_id)
            assert doc is not None
            texts.append(doc.text)
        prompt = assemble_prompt(submission, self.rubric, results, texts)
        current = prompt.render()

        attempts = 1 + self.max_output_repair_attempts
        last_error: Exception | None = None
        for _attempt in range(attempts):
            raw = self.provider.generate(
                ProviderRequest(
                    system=prompt.system_text,
                    prompt=current,
                    temperature=self.temperature,
                    submission_id=submission.id,
                )
            )
            try:
                parsed = parse_agent_output(raw, self.rubric)
            except (NoJsonObject, SchemaViolation, UnknownCriterion, BandPercentMismatch) as exc:
                last_error = exc
                current = f"{current}\n\n## Correction\n{_correction_text(exc)}"
                continue
            total = weighted_total(self.rubric, parsed.criterion_scores)
            now = now_utc_iso()
            assessment = Assessment(
                id=f"asmt-{uuid.uuid4().hex[:12]}",
                submission_id=submission.id,
                rubric_id=self.rubric.id,
                criterion_scores=parsed.criterion_scores,
                overall_comment=parsed.overall_comment,
                total_percent=total,
                evidence=tuple(results),
                generated_at=now,
                model_label=self.provider.label,
                status=AssessmentStatus.PENDING_REVIEW,
                review_trail=(
                    AuditEntry(at=now, reviewer_id="agent", action=ReviewAction.SUBMITTED),
                ),
            )
            self.assessments.add(assessment)
            return assessment
        raise UnparseableAfterRepairs(
            f"model output stayed invalid after {attempts} attempts: {last_error}"
        )
