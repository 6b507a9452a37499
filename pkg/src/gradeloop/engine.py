"""Composition root wiring stores, providers, grading, review, and reports."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .agent import (
    Assessment,
    Grader,
    Submission,
    SubmissionStore,
    build_llm_provider,
    make_submission,
)
from .config import ServiceConfig
from .corpus import CorpusStore, DocType, Document, ScanResult, ingest_document, scan_inbox
from .embedding import build_embedder
from .errors import EmptyDocument, GradeLoopError, InsufficientData, StoreLoadFailure
from .reliability import PairedScores, ReliabilityReport, load_pairs_csv, reliability_report
from .review import AssessmentStore, ReviewService
from .rubric import default_rubric, load_rubric
from .storage import append_record, read_records
from .vector_index import VectorIndex


@dataclass(frozen=True)
class BatchFailure:
    submission_id: str
    reason: str


@dataclass(frozen=True)
class BatchSummary:
    graded: int
    failed: int
    failures: tuple[BatchFailure, ...]


class Engine:
    """Everything behind the API: one instance owns one set of stores."""

    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        try:
            self.rubric = load_rubric(config.rubric_path) if config.rubric_path else default_rubric()
            self.corpus = CorpusStore(config.corpus_path)
            self.submissions = SubmissionStore(config.submission_store_path)
            self.assessments = AssessmentStore(config.assessment_store_path)
            if Path(config.index_path).exists():
                self.index = VectorIndex.load(config.index_path, dims=config.embedding.dims)
            else:
                self.index = VectorIndex(dims=config.embedding.dims, path=config.index_path)
        except GradeLoopError:
            raise
        except Exception as exc:
            raise StoreLoadFailure(f"cannot load stores: {exc}") from exc
        self.embedder = build_embedder(config.embedding)
        self.provider = build_llm_provider(config.llm)
        self.grader = Grader(
            rubric=self.rubric,
            index=self.index,
            embedder=self.embedder,
            provider=self.provider,
            assessments=self.assessments,
            temperature=config.llm.temperature,
            max_output_repair_attempts=config.llm.max_output_repair_attempts,
            default_k=config.default_k,
        )
        self.review = ReviewService(
            assessments=self.assessments,
            submissions=self.submissions,
            corpus=self.corpus,
            index=self.index,
            embedder=self.embedder,
            rubric=self.rubric,
        )
        self._human_scores_path = Path(str(config.assessment_store_path) + ".human")

    # -- ingestion --

    def ingest_and_index(
        self,
        text: str,
        doc_type: DocType | str,
        source_name: str,
        cohort: str | None = None,
    ) -> Document:
        """Ingest one document, embed it, and make it retrievable."""
        doc = ingest_document(self.corpus, text, doc_type, source_name, cohort)
        embedded = self.corpus.set_embedding(doc.id, self.embedder.embed(doc.text))
        self.index.upsert(embedded)
        return embedded

    def scan_and_index(self, directory: Path, default_doc_type: DocType | str | None = None) -> ScanResult:
        """Scan an inbox directory and embed/index everything new."""
        result = scan_inbox(self.corpus, directory, default_doc_type)
        indexed: list[Document] = []
        for doc in result.documents:
            embedded = self.corpus.set_embedding(doc.id, self.embedder.embed(doc.text))
            self.index.upsert(embedded)
            indexed.append(embedded)
        return ScanResult(documents=indexed, errors=result.errors, skipped=result.skipped)

    # -- submissions and grading --

    def add_submission(
        self,
        student_ref: str,
        essay_text: str,
        cohort: str | None = None,
        submission_id: str | None = None,
    ) -> Submission:
        if not essay_text.strip():
            raise EmptyDocument("essay text is empty")
        submission = make_submission(student_ref, essay_text, cohort, submission_id)
        self.submissions.add(submission)
        return submission

    def grade_submission(self, submission_id: str, k: int | None = None) -> Assessment:
        """Grade a stored submission; auto-approve when configured."""
        submission = self.submissions.require(submission_id)
        assessment = self.grader.grade(submission, k)
        if self.config.auto_approve:
            self.review.approve(assessment.id, reviewer_id="auto-approver")
            assessment = self.assessments.require(assessment.id)
        return assessment

    def grade_batch(self, directory: Path, cohort: str | None = None, k: int | None = None) -> BatchSummary:
        """Grade every essay file in a directory; failures do not stop the batch."""
        directory = Path(directory)
        files = sorted(p for p in directory.iterdir() if p.is_file())
        submissions: list[Submission] = []
        failures: list[BatchFailure] = []
        for path in files:
            try:
                text = path.read_text(encoding="utf-8")
                submission = self.add_submission(
                    student_ref=path.stem,
                    essay_text=text,
                    cohort=cohort,
                    submission_id=path.stem,
                )
                submissions.append(submission)
            except (GradeLoopError, OSError, UnicodeDecodeError, ValueError) as exc:
                failures.append(BatchFailure(path.stem, str(exc)))

        def run(submission: Submission) -> tuple[Submission, Exception | None]:
            try:
                self.grade_submission(submission.id, k)
                return submission, None
            except GradeLoopError as exc:
                return submission, exc

        graded = 0
        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            for submission, error in pool.map(run, submissions):
                if error is None:
                    graded += 1
                else:
                    failures.append(BatchFailure(submission.id, str(error)))
        return BatchSummary(graded=graded, failed=len(failures), failures=tuple(failures))

    # -- reports --

    def store_human_scores(self, csv_text: str) -> int:
        """Persist uploaded human scores keyed by submission id; returns row count."""
        pairs = load_pairs_csv(csv_text)
        for row_id, a, b in zip(pairs.ids, pairs.rater_a, pairs.rater_b):
            append_record(
                self._human_scores_path,
                {"id": row_id, "rater_a": a, "rater_b": b},
            )
        return len(pairs)

    def _human_scores(self) -> dict[str, float]:
        scores: dict[str, float] = {}
        for record in read_records(self._human_scores_path):
            scores[str(record["id"])] = float(record["rater_a"])
        return scores

    def reliability(self, cohort: str | None = None) -> tuple[ReliabilityReport, int, PairedScores]:
        """Agreement report for human-scored submissions, the count of uploaded
        rows that matched no graded submission in scope, and the matched pairs
        themselves (for plotting)."""
        human = self._human_scores()
        latest: dict[str, Assessment] = {}
        for assessment in self.assessments.list():
            latest[assessment.submission_id] = assessment
        ids: list[str] = []
        a: list[float] = []
        b: list[float] = []
        unmatched = 0
        for submission_id, human_score in human.items():
            assessment = latest.get(submission_id)
            if assessment is None:
                unmatched += 1
                continue
            if cohort is not None:
                submission = self.submissions.get(submission_id)
                if submission is None or submission.cohort != cohort:
                    unmatched += 1
                    continue
            ids.append(submission_id)
            a.append(human_score)
            b.append(assessment.total_percent)
        if len(ids) < 2:
            raise InsufficientData(
                f"reliability needs at least 2 matched human-machine pairs, found {len(ids)}"
            )
        try:
            approval = self.review.approval_rate(cohort)
        except GradeLoopError:
            approval = None
        pairs = PairedScores(rater_a=tuple(a), rater_b=tuple(b), ids=tuple(ids))
        bands = self.rubric.criteria[0].bands if self.rubric.criteria else None
        return reliability_report(pairs, bands=bands, approval_rate=approval), unmatched, pairs

    def close(self) -> None:
        closer = getattr(self.provider, "close", None)
        if closer:
            closer()
        closer = getattr(self.embedder, "close", None)
        if closer:
            closer()
