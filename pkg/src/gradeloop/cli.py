"""Command line entry point: serve, ingest, grade, review, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ServiceConfig, load_config
from .engine import Engine
from .errors import GradeLoopError
from .reliability import load_pairs_csv, reliability_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradeloop", description="Rubric-grounded essay grading service")
    parser.add_argument("--config", type=Path, help="path to the service config JSON")
    parser.add_argument("--k", type=int, default=None, help="retrieval depth override")
    commands = parser.add_subparsers(dest="command", required=True)

    serve_cmd = commands.add_parser("serve", help="run the HTTP API")
    serve_cmd.add_argument("--ui-dir", type=Path, default=None, help="directory of static review UI files")

    ingest_cmd = commands.add_parser("ingest", help="scan a directory into the corpus")
    ingest_cmd.add_argument("directory", type=Path)
    ingest_cmd.add_argument("--doc-type", default=None, help="default doc_type for files without front matter")

    grade_cmd = commands.add_parser("grade", help="grade every essay file in a directory")
    grade_cmd.add_argument("directory", type=Path)
    grade_cmd.add_argument("--cohort", default=None)

    review_cmd = commands.add_parser("review", help="list or decide pending assessments")
    review_sub = review_cmd.add_subparsers(dest="review_command", required=True)
    review_list = review_sub.add_parser("list", help="show the pending queue")
    review_list.add_argument("--cohort", default=None)
    review_approve = review_sub.add_parser("approve", help="approve a pending assessment")
    review_approve.add_argument("assessment_id")
    review_approve.add_argument("--reviewer", required=True)
    review_reject = review_sub.add_parser("reject", help="reject a pending assessment")
    review_reject.add_argument("assessment_id")
    review_reject.add_argument("--reviewer", required=True)
    review_reject.add_argument("--reason", required=True)
    review_reject.add_argument("--regenerate", action="store_true")

    report_cmd = commands.add_parser("report", help="agreement statistics for a pairs CSV")
    report_cmd.add_argument("pairs_csv", type=Path, help="CSV with header id,rater_a,rater_b")

    return parser


def _require_config(args: argparse.Namespace) -> ServiceConfig:
    if args.config is None:
        raise GradeLoopError("this command needs --config pointing at a service config JSON")
    return load_config(args.config)


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(_require_config(args), ui_dir=args.ui_dir)
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    engine = Engine(_require_config(args))
    result = engine.scan_and_index(args.directory, default_doc_type=args.doc_type)
    for doc in result.documents:
        print(f"ingested {doc.id} [{doc.doc_type.value}] {doc.source_name}")
    if result.skipped:
        print(f"skipped {result.skipped} already-ingested file(s)")
    for error in result.errors:
        print(f"error {error.path}: {error.reason}", file=sys.stderr)
    return 0 if not result.errors else 1


def _cmd_grade(args: argparse.Namespace) -> int:
    engine = Engine(_require_config(args))
    summary = engine.grade_batch(args.directory, cohort=args.cohort, k=args.k)
    print(f"graded {summary.graded}, failed {summary.failed}")
    for failure in summary.failures:
        print(f"failed {failure.submission_id}: {failure.reason}", file=sys.stderr)
    return 0 if summary.failed == 0 else 1


def _cmd_review(args: argparse.Namespace) -> int:
    engine = Engine(_require_config(args))
    if args.review_command == "list":
        pending = engine.review.list_pending(cohort=args.cohort)
        for assessment in pending:
            submission = engine.submissions.get(assessment.submission_id)
            ref = submission.student_ref if submission else "?"
            print(
                f"{assessment.id}  {assessment.submission_id}  {ref}  "
                f"{assessment.total_percent:.1f}%  {assessment.generated_at}"
            )
        if not pending:
            print("queue is empty")
        return 0
    if args.review_command == "approve":
        document = engine.review.approve(args.assessment_id, args.reviewer)
        print(f"approved {args.assessment_id}; feedback stored as {document.id}")
        return 0
    engine.review.reject(
        args.assessment_id, args.reviewer, args.reason, request_regeneration=args.regenerate
    )
    print(f"rejected {args.assessment_id}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    pairs = load_pairs_csv(args.pairs_csv.read_text(encoding="utf-8"))
    report = reliability_report(pairs)
    print(json.dumps(report.to_record(), indent=2))
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "ingest": _cmd_ingest,
    "grade": _cmd_grade,
    "review": _cmd_review,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except GradeLoopError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
