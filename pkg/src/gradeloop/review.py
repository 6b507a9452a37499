"""Human review workflow over drafted assessments.

Legal transitions are pending_review -> approved and pending_review ->
rejected; everything else raises InvalidState. Approval re-ingests the
feedback into the corpus and index. That multi-store step is guarded by a
write-ahead intent file: an intent is recorded before any effect, marked done
after the last one, and unfinished intents are replayed or discarded on the
next startup, so a crash can never leave a half-approved assessment visible.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .agent import (
    Assessment,
    AssessmentStatus,
    AuditEntry,
    Embedder,
    ReviewAction,
    Submission,
    SubmissionStore,
)
from .corpus import CorpusStore, DocType, Document, Provenance, fresh_doc_id
from .errors import (
    EmptyReason,
    InvalidState,
    NoDecidedAssessments,
    NotFound,
)
from .rubric import CriterionScore, Rubric, validate_scores, weighted_total
from .storage import append_record, now_utc_iso, read_records
from .vector_index import VectorIndex

DECIDED = (AssessmentStatus.APPROVED, AssessmentStatus.REJECTED)


class AssessmentStore:
    """Append-structured assessment store, latest record per id wins."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        items: dict[str, Assessment] = {}
        for raw in read_records(self.path):
            assessment = Assessment.from_record(raw)
            items[assessment.id] = assessment
        self._items = items

    def __len__(self) -> int:
        return len(self._items)

    def get(self, assessment_id: str) -> Assessment | None:
        return self._items.get(assessment_id)

    def require(self, assessment_id: str) -> Assessment:
        assessment = self._items.get(assessment_id)
        if assessment is None:
            raise NotFound(f"assessment {assessment_id!r} does not exist")
        return assessment

    def list(self, status: AssessmentStatus | None = None) -> list[Assessment]:
        items = list(self._items.values())
        if status is not None:
            items = [a for a in items if a.status is status]
        return items

    def add(self, assessment: Assessment) -> None:
        with self._lock:
            append_record(self.path, assessment.to_record())
            items = dict(self._items)
            items[assessment.id] = assessment
            self._items = items

    # Updates append a superseding record, same as add.
    update = add


def feedback_document_text(rubric: Rubric, assessment: Assessment) -> str:
    """Render approved feedback as a markdown document for re-ingestion."""
    by_id = {score.criterion_id: score for score in assessment.criterion_scores}
    parts: list[str] = []
    for criterion in rubric.criteria:
        score = by_id.get(criterion.id)
        if score is None:
            continue
        parts.append(
            f"## {criterion.name}\n"
            f"Band: {score.band.value} ({score.percent:g}%)\n"
            f"{score.comment}"
        )
    parts.append(f"## Overall\n{assessment.overall_comment}")
    return "\n\n".join(parts)


def _diff_summary(old: Assessment, scores: Sequence[CriterionScore], overall: str) -> str:
    previous = {s.criterion_id: s for s in old.criterion_scores}
    changes: list[str] = []
    for score in scores:
        before = previous.get(score.criterion_id)
        if before is None:
            changes.append(f"{score.criterion_id}: added")
            continue
        if before.percent != score.percent:
            changes.append(f"{score.criterion_id}: percent {before.percent:g} -> {score.percent:g}")
        if before.band is not score.band:
            changes.append(f"{score.criterion_id}: band {before.band.value} -> {score.band.value}")
        if before.comment != score.comment:
            changes.append(f"{score.criterion_id}: comment revised")
    if old.overall_comment != overall:
        changes.append("overall_comment revised")
    return "; ".join(changes) if changes else "no changes"


class IntentLog:
    """Write-ahead record of in-flight approve operations."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)

    def begin(self, assessment_id: str, document: dict) -> str:
        intent_id = uuid.uuid4().hex
        append_record(
            self.path,
            {"intent_id": intent_id, "phase": "begin", "assessment_id": assessment_id, "document": document},
        )
        return intent_id

    def done(self, intent_id: str) -> None:
        append_record(self.path, {"intent_id": intent_id, "phase": "done"})

    def unfinished(self) -> list[dict]:
        begun: dict[str, dict] = {}
        finished: set[str] = set()
        for record in read_records(self.path):
            if record.get("phase") == "begin":
                begun[record["intent_id"]] = record
            elif record.get("phase") == "done":
                finished.add(record["intent_id"])
        return [record for intent_id, record in begun.items() if intent_id not in finished]

    def clear(self) -> None:
        if self.path.exists():
            self.path.unlink()


class ReviewService:
    """Queue listing, approve/edit/reject transitions, and derived metrics."""

    def __init__(
        self,
        *,
        assessments: AssessmentStore,
        submissions: SubmissionStore,
        corpus: CorpusStore,
        index: VectorIndex,
        embedder: Embedder,
        rubric: Rubric,
    ) -> None:
        self.assessments = assessments
        self.submissions = submissions
        self.corpus = corpus
        self.index = index
        self.embedder = embedder
        self.rubric = rubric
        self._lock = threading.Lock()
        self._intents = IntentLog(Path(str(assessments.path) + ".intents"))
        self._recover()

    # -- queue --

    def _cohort_of(self, assessment: Assessment) -> str | None:
        submission = self.submissions.get(assessment.submission_id)
        return submission.cohort if submission else None

    def list_pending(self, cohort: str | None = None) -> list[Assessment]:
        pending = self.assessments.list(status=AssessmentStatus.PENDING_REVIEW)
        if cohort is not None:
            pending = [a for a in pending if self._cohort_of(a) == cohort]
        return sorted(pending, key=lambda a: a.generated_at)

    # -- transitions --

    def _require_pending(self, assessment: Assessment, action: str) -> None:
        if assessment.status is not AssessmentStatus.PENDING_REVIEW:
            raise InvalidState(
                f"cannot {action} assessment {assessment.id!r} in status {assessment.status.value!r}"
            )

    def approve(self, assessment_id: str, reviewer_id: str) -> Document:
        """Approve as-is; returns the re-ingested feedback document."""
        assessment = self.assessments.require(assessment_id)
        self._require_pending(assessment, "approve")
        entry = AuditEntry(
            at=now_utc_iso(),
            reviewer_id=reviewer_id,
            action=ReviewAction.APPROVED,
        )
        approved = replace(
            assessment,
            status=AssessmentStatus.APPROVED,
            review_trail=assessment.review_trail + (entry,),
        )
        return self._commit_approval(approved, reviewer_id)

    def edit_and_approve(
        self,
        assessment_id: str,
        reviewer_id: str,
        scores: Sequence[CriterionScore],
        overall_comment: str,
    ) -> Document:
        """Apply reviewer edits, recompute the total, then approve."""
        assessment = self.assessments.require(assessment_id)
        self._require_pending(assessment, "edit")
        if not overall_comment.strip():
            raise EmptyReason("edited overall comment is empty")
        validate_scores(self.rubric, scores)
        total = weighted_total(self.rubric, scores)
        entry = AuditEntry(
            at=now_utc_iso(),
            reviewer_id=reviewer_id,
            action=ReviewAction.EDITED,
            diff_summary=_diff_summary(assessment, scores, overall_comment),
        )
        approved = replace(
            assessment,
            criterion_scores=tuple(scores),
            overall_comment=overall_comment,
            total_percent=total,
            status=AssessmentStatus.APPROVED,
            review_trail=assessment.review_trail + (entry,),
        )
        return self._commit_approval(approved, reviewer_id)

    def reject(
        self,
        assessment_id: str,
        reviewer_id: str,
        reason: str,
        request_regeneration: bool = False,
    ) -> Assessment:
        """Reject with a reason; optionally queue the submission for regrading."""
        assessment = self.assessments.require(assessment_id)
        self._require_pending(assessment, "reject")
        if not reason.strip():
            raise EmptyReason("rejection reason is empty")
        now = now_utc_iso()
        trail = assessment.review_trail + (
            AuditEntry(at=now, reviewer_id=reviewer_id, action=ReviewAction.REJECTED, note=reason),
        )
        if request_regeneration:
            trail = trail + (
                AuditEntry(at=now, reviewer_id=reviewer_id, action=ReviewAction.REGENERATION_REQUESTED),
            )
        with self._lock:
            rejected = replace(assessment, status=AssessmentStatus.REJECTED, review_trail=trail)
            self.assessments.update(rejected)
        return rejected

    # -- approval with re-ingestion --

    def _feedback_document(self, assessment: Assessment, reviewer_id: str, approved_at: str) -> Document:
        text = feedback_document_text(self.rubric, assessment)
        submission = self.submissions.get(assessment.submission_id)
        return Document(
            id=fresh_doc_id(text, {d.id for d in self.corpus.list()}),
            doc_type=DocType.APPROVED_FEEDBACK,
            text=text,
            source_name=f"approved feedback for {assessment.submission_id}",
            ingested_at=approved_at,
            cohort=submission.cohort if submission else None,
            provenance=Provenance(
                submission_id=assessment.submission_id,
                reviewer_id=reviewer_id,
                approved_at=approved_at,
            ),
        )

    def _commit_approval(self, approved: Assessment, reviewer_id: str) -> Document:
        with self._lock:
            current = self.assessments.require(approved.id)
            self._require_pending(current, "approve")
            approved_at = approved.review_trail[-1].at
            document = self._feedback_document(approved, reviewer_id, approved_at)
            intent_id = self._intents.begin(approved.id, document.to_record())
            self.assessments.update(approved)
            document = self._reingest(document)
            self._intents.done(intent_id)
            return document

    def _reingest(self, document: Document) -> Document:
        """Embed the feedback document and make it retrievable. Idempotent."""
        if self.corpus.get(document.id) is None:
            self.corpus.add(document)
        embedded = replace(document, embedding=self.embedder.embed(document.text))
        self.corpus.set_embedding(document.id, embedded.embedding)
        self.index.upsert(embedded)
        return embedded

    def _recover(self) -> None:
        """Finish or discard approve operations interrupted by a crash."""
        for record in self._intents.unfinished():
            assessment = self.assessments.get(record["assessment_id"])
            if assessment is None or assessment.status is not AssessmentStatus.APPROVED:
                # The status write never landed, so the approval never happened.
                continue
            document = Document.from_record(record["document"])
            self._reingest(document)
        self._intents.clear()

    # -- derived metrics --

    def decided(self, cohort: str | None = None) -> list[Assessment]:
        items = [a for a in self.assessments.list() if a.status in DECIDED]
        if cohort is not None:
            items = [a for a in items if self._cohort_of(a) == cohort]
        return items

    def approval_rate(self, cohort: str | None = None) -> float:
        """Approved (including edited) over all decided assessments."""
        decided = self.decided(cohort)
        if not decided:
            raise NoDecidedAssessments("no approved or rejected assessments in scope")
        approved = sum(1 for a in decided if a.status is AssessmentStatus.APPROVED)
        return approved / len(decided)

    def pending_regrades(self) -> list[Submission]:
        """Submissions whose newest assessment was rejected with regeneration."""
        latest: dict[str, Assessment] = {}
        for assessment in self.assessments.list():
            latest[assessment.submission_id] = assessment
        queued: list[Submission] = []
        for submission_id, assessment in latest.items():
            if assessment.status is not AssessmentStatus.REJECTED:
                continue
            if not any(e.action is ReviewAction.REGENERATION_REQUESTED for e in assessment.review_trail):
                continue
            submission = self.submissions.get(submission_id)
            if submission is not None:
                queued.append(submission)
        return queued
