"""HTTP API over the engine.

Every error body has the shape {"error": {"code": ..., "message": ...}} with
the code taken from the engine error class. When the configured token
environment variable is set, all routes except the health check require a
matching bearer token.
"""

from __future__ import annotations

import os
import socket
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .agent import Assessment, AssessmentStatus, Submission
from .config import ServiceConfig
from .corpus import DocType, Document
from .engine import Engine
from .errors import BindFailure, GradeLoopError, SchemaViolation
from .rubric import BandLabel, CriterionScore, rubric_to_dict


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _document_summary(doc: Document) -> dict:
    return {
        "id": doc.id,
        "doc_type": doc.doc_type.value,
        "source_name": doc.source_name,
        "ingested_at": doc.ingested_at,
        "cohort": doc.cohort,
        "word_count": doc.word_count,
        "provenance": doc.provenance.to_record() if doc.provenance else None,
    }


def _queue_item(assessment: Assessment, submission: Submission | None) -> dict:
    return {
        "assessment_id": assessment.id,
        "submission_id": assessment.submission_id,
        "student_ref": submission.student_ref if submission else None,
        "total_percent": assessment.total_percent,
        "generated_at": assessment.generated_at,
        "length_flag": submission.length_flag if submission else None,
        "cohort": submission.cohort if submission else None,
        "status": assessment.status.value,
    }


def _require(payload: dict, field: str) -> object:
    value = payload.get(field)
    if value is None:
        raise SchemaViolation(field, "missing")
    return value


def _require_str(payload: dict, field: str) -> str:
    value = _require(payload, field)
    if not isinstance(value, str) or not value.strip():
        raise SchemaViolation(field, "must be a non-empty string")
    return value


def _require_text(payload: dict, field: str) -> str:
    # Type check only; blankness is the engine's call (EmptyDocument, EmptyReason).
    value = _require(payload, field)
    if not isinstance(value, str):
        raise SchemaViolation(field, "must be a string")
    return value


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise SchemaViolation("body", "request body is not valid JSON") from None
    if not isinstance(payload, dict):
        raise SchemaViolation("body", "request body must be a JSON object")
    return payload


def _parse_scores(raw: object) -> list[CriterionScore]:
    if not isinstance(raw, list):
        raise SchemaViolation("criterion_scores", "must be a list")
    scores: list[CriterionScore] = []
    for pos, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise SchemaViolation("criterion_scores", f"entry {pos} is not an object")
        try:
            band = BandLabel(entry.get("band"))
        except ValueError:
            raise SchemaViolation("band", f"{entry.get('band')!r} is not a band label") from None
        percent = entry.get("percent")
        if isinstance(percent, bool) or not isinstance(percent, (int, float)):
            raise SchemaViolation("percent", f"entry {pos}: percent is not a number")
        comment = entry.get("comment")
        if not isinstance(comment, str) or not comment.strip():
            raise SchemaViolation("comment", f"entry {pos}: comment is missing or empty")
        criterion_id = entry.get("criterion_id")
        if not isinstance(criterion_id, str) or not criterion_id:
            raise SchemaViolation("criterion_id", f"entry {pos}: missing criterion_id")
        scores.append(
            CriterionScore(criterion_id=criterion_id, band=band, percent=float(percent), comment=comment)
        )
    return scores


def create_app(engine: Engine, ui_dir: Path | None = None) -> FastAPI:
    """Build the API application around one engine instance."""
    app = FastAPI(title="gradeloop", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.exception_handler(GradeLoopError)
    async def handle_engine_error(_request: Request, exc: GradeLoopError) -> JSONResponse:
        return _error_response(exc.code, str(exc), exc.http_status)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response("SchemaViolation", str(exc), 400)

    @app.middleware("http")
    async def check_token(request: Request, call_next: Callable) -> Response:
        expected = os.environ.get(engine.config.api_token_env_var, "")
        if expected and request.url.path.startswith("/api/") and request.url.path != "/api/health":
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {expected}":
                return _error_response("AuthFailure", "missing or wrong API token", 401)
        return await call_next(request)

    @app.get("/api/health")
    async def health() -> dict:
        return {
            "status": "ok",
            "documents": len(engine.corpus),
            "indexed": len(engine.index),
            "pending_review": len(engine.review.list_pending()),
        }

    @app.get("/api/rubric")
    async def get_rubric() -> dict:
        return rubric_to_dict(engine.rubric)

    @app.post("/api/corpus/documents", status_code=201)
    async def add_document(request: Request) -> dict:
        payload = await _json_body(request)
        doc = engine.ingest_and_index(
            text=_require_text(payload, "text"),
            doc_type=_require_str(payload, "doc_type"),
            source_name=_require_str(payload, "source_name"),
            cohort=payload.get("cohort"),
        )
        return _document_summary(doc)

    @app.get("/api/corpus/documents")
    async def list_documents(doc_type: str | None = None, cohort: str | None = None) -> list[dict]:
        kind: DocType | None = None
        if doc_type is not None:
            try:
                kind = DocType(doc_type)
            except ValueError:
                raise SchemaViolation("doc_type", f"{doc_type!r} is not a doc type") from None
        docs = engine.corpus.list(doc_type=kind, cohort=cohort)
        docs.sort(key=lambda d: (d.ingested_at, d.id))
        return [_document_summary(d) for d in docs]

    @app.post("/api/submissions", status_code=201)
    async def add_submission(request: Request) -> dict:
        payload = await _json_body(request)
        submission = engine.add_submission(
            student_ref=_require_str(payload, "student_ref"),
            essay_text=_require_text(payload, "essay_text"),
            cohort=payload.get("cohort"),
        )
        record = submission.to_record()
        record["length_flag"] = submission.length_flag
        return record

    @app.post("/api/submissions/{submission_id}/grade", status_code=201)
    async def grade(submission_id: str, k: int | None = None) -> dict:
        assessment = engine.grade_submission(submission_id, k)
        return assessment.to_record()

    @app.get("/api/assessments")
    async def list_assessments(status: str | None = None, cohort: str | None = None) -> list[dict]:
        wanted: AssessmentStatus | None = None
        if status is not None:
            try:
                wanted = AssessmentStatus(status)
            except ValueError:
                raise SchemaViolation("status", f"{status!r} is not an assessment status") from None
        items = engine.assessments.list(status=wanted)
        if cohort is not None:
            items = [
                a
                for a in items
                if (sub := engine.submissions.get(a.submission_id)) is not None and sub.cohort == cohort
            ]
        items.sort(key=lambda a: (a.generated_at, a.id))
        return [_queue_item(a, engine.submissions.get(a.submission_id)) for a in items]

    @app.get("/api/assessments/{assessment_id}")
    async def assessment_detail(assessment_id: str) -> dict:
        assessment = engine.assessments.require(assessment_id)
        submission = engine.submissions.get(assessment.submission_id)
        evidence = []
        for result in assessment.evidence:
            doc = engine.index.get(result.doc_id) or engine.corpus.get(result.doc_id)
            evidence.append(
                {
                    **result.to_record(),
                    "text": doc.text if doc else None,
                    "source_name": doc.source_name if doc else None,
                }
            )
        detail = {
            "assessment": assessment.to_record(),
            "submission": submission.to_record() if submission else None,
            "evidence": evidence,
            "rubric": rubric_to_dict(engine.rubric),
        }
        if submission is not None:
            detail["submission"]["length_flag"] = submission.length_flag
        return detail

    @app.post("/api/assessments/{assessment_id}/approve")
    async def approve(assessment_id: str, request: Request) -> dict:
        payload = await _json_body(request)
        document = engine.review.approve(assessment_id, _require_str(payload, "reviewer_id"))
        return {
            "assessment_id": assessment_id,
            "status": AssessmentStatus.APPROVED.value,
            "document_id": document.id,
        }

    @app.post("/api/assessments/{assessment_id}/edit")
    async def edit(assessment_id: str, request: Request) -> dict:
        payload = await _json_body(request)
        document = engine.review.edit_and_approve(
            assessment_id,
            _require_str(payload, "reviewer_id"),
            _parse_scores(_require(payload, "criterion_scores")),
            _require_text(payload, "overall_comment"),
        )
        assessment = engine.assessments.require(assessment_id)
        return {
            "assessment_id": assessment_id,
            "status": assessment.status.value,
            "total_percent": assessment.total_percent,
            "document_id": document.id,
        }

    @app.post("/api/assessments/{assessment_id}/reject")
    async def reject(assessment_id: str, request: Request) -> dict:
        payload = await _json_body(request)
        assessment = engine.review.reject(
            assessment_id,
            _require_str(payload, "reviewer_id"),
            _require_text(payload, "reason"),
            bool(payload.get("request_regeneration", False)),
        )
        return {
            "assessment_id": assessment_id,
            "status": assessment.status.value,
            "regeneration_requested": bool(payload.get("request_regeneration", False)),
        }

    @app.get("/api/reports/reliability")
    async def reliability(cohort: str | None = None) -> dict:
        report, unmatched, pairs = engine.reliability(cohort)
        record = report.to_record()
        record["unmatched"] = unmatched
        record["pairs"] = [
            {"id": pair_id, "human": human, "machine": machine}
            for pair_id, human, machine in zip(pairs.ids, pairs.rater_a, pairs.rater_b)
        ]
        return record

    @app.post("/api/reports/human-scores", status_code=201)
    async def upload_human_scores(request: Request) -> dict:
        body = await request.body()
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise SchemaViolation("body", "CSV body is not valid UTF-8") from None
        rows = engine.store_human_scores(text)
        return {"rows": rows}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(config: ServiceConfig, ui_dir: Path | None = None) -> None:
    """Bind the listen address and run the API until interrupted."""
    import uvicorn

    engine = Engine(config)
    app = create_app(engine, ui_dir=ui_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((config.host, config.port))
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot bind {config.listen_address}: {exc}") from exc
    try:
        server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
        server.run(sockets=[sock])
    finally:
        sock.close()
        engine.close()
