"""Release gate: one test per headline guarantee, each with a runtime budget.

Every numeric claim is checked against the independent references in
oracles.py rather than against the package's own arithmetic.
"""

from __future__ import annotations

import copy
import math
import random
import time
from pathlib import Path

import pytest

from gradeloop import DocType, Engine
from gradeloop.corpus import CorpusStore, ingest_document
from gradeloop.embedding import ReferenceEmbedder
from gradeloop.errors import InvalidState
from gradeloop.reliability import bin_to_bands, bland_altman, cohens_kappa, icc_2_1, mae_rmse, pearson_r
from gradeloop.vector_index import QueryFilter, VectorIndex

from .conftest import CRITERIA, PROFILE_72, build_engine, model_output, scores_from_profile
from .oracles import (
    oracle_bland_altman,
    oracle_icc_2_1,
    oracle_kappa,
    oracle_band,
    oracle_mae,
    oracle_pearson,
    oracle_rmse,
    oracle_top_k,
)
from .test_engine import essay_text


def isclose(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)


# --- fixture batch: 20 essays on distinct topics plus one held-out twin ---

TOPICS = [f"subject{i:02d}flux" for i in range(20)]
HELD_OUT_TOPIC = TOPICS[5]


def topic_output(topic: str) -> str:
    comment = f"Strong treatment of {topic}; the {topic} reasoning stays close to the {topic} evidence."
    return model_output(PROFILE_72, overall=f"A solid essay on {topic}.", comments={c: comment for c in CRITERIA})


def build_loop_engine(base: Path) -> tuple[Engine, Path]:
    script = {f"essay-{i:02d}": [topic_output(TOPICS[i])] for i in range(20)}
    script["*"] = [topic_output(HELD_OUT_TOPIC)] * 4
    engine = build_engine(base, script=script)
    engine.ingest_and_index(essay_text("general engineering method"), "exemplar_essay", "seed-a.md")
    engine.ingest_and_index(essay_text("report structure and style"), "instructor_feedback", "seed-b.md")
    essays = base / "essays"
    essays.mkdir()
    for i, topic in enumerate(TOPICS):
        (essays / f"essay-{i:02d}.md").write_text(essay_text(topic), encoding="utf-8")
    return engine, essays


def run_loop(base: Path) -> list[dict]:
    """Grade the fixture batch, approve 19, reject 1; return assessment records."""
    base.mkdir(parents=True, exist_ok=True)
    engine, essays = build_loop_engine(base)
    summary = engine.grade_batch(essays)
    assert summary.failed == 0
    for assessment in engine.review.list_pending():
        if assessment.submission_id == "essay-19":
            engine.review.reject(assessment.id, "rev-1", "Whole criterion misjudged.")
        else:
            engine.review.approve(assessment.id, "rev-1")
    records = [a.to_record() for a in engine.assessments.list()]
    records.sort(key=lambda r: r["submission_id"])
    return records


def test_fixture_grade_totals_72_exactly(tmp_path):
    started = time.monotonic()
    engine = build_engine(tmp_path, script={"*": [model_output(PROFILE_72)]})
    engine.ingest_and_index(essay_text("heat exchangers"), "exemplar_essay", "seed.md")
    submission = engine.add_submission("student-1", essay_text("heat exchanger sizing"))
    assessment = engine.grade_submission(submission.id)
    assert abs(assessment.total_percent - 72.0) <= 1e-9
    assert [s.percent for s in assessment.criterion_scores] == [90, 60, 75, 45, 90]
    assert time.monotonic() - started < 1.0


def test_statistics_match_independent_references_on_random_data(tmp_path):
    started = time.monotonic()
    for seed in range(20):
        rng = random.Random(1000 + seed)
        n = rng.randint(5, 200)
        human = [rng.uniform(0.0, 100.0) for _ in range(n)]
        machine = [min(100.0, max(0.0, h + rng.uniform(-20.0, 20.0))) for h in human]

        expected_kappa = oracle_kappa([oracle_band(h) for h in human], [oracle_band(m) for m in machine])
        assert isclose(cohens_kappa(bin_to_bands(human), bin_to_bands(machine)), expected_kappa)

        matrix = [[h, m] for h, m in zip(human, machine)]
        assert isclose(icc_2_1(matrix), oracle_icc_2_1(matrix))
        assert isclose(pearson_r(human, machine), oracle_pearson(human, machine))

        mae, rmse = mae_rmse(human, machine)
        assert isclose(mae, oracle_mae(human, machine))
        assert isclose(rmse, oracle_rmse(human, machine))

        ba = bland_altman(human, machine)
        mean, sd, lower, upper = oracle_bland_altman(human, machine)
        assert isclose(ba.mean_diff, mean) and isclose(ba.sd_diff, sd)
        assert isclose(ba.loa_lower, lower) and isclose(ba.loa_upper, upper)
    assert time.monotonic() - started < 10.0


def test_limits_of_agreement_from_known_mean_and_sd():
    started = time.monotonic()
    # Five diffs with mean exactly -1.8 and sample sd exactly 6.4/1.96.
    sd = 6.4 / 1.96
    diffs = [-1.8 + sd * z for z in (-1.0, -1.0, 0.0, 1.0, 1.0)]
    human = [70.0, 75.0, 68.0, 80.0, 72.0]
    machine = [h + d for h, d in zip(human, diffs)]
    ba = bland_altman(human, machine)
    assert abs(ba.mean_diff - (-1.8)) <= 0.05
    assert abs(ba.sd_diff - 3.2653) <= 0.0001
    assert abs(ba.loa_lower - (-8.2)) <= 0.05
    assert abs(ba.loa_upper - 4.6) <= 0.05
    assert time.monotonic() - started < 1.0


def test_icc_worked_example_is_eight_ninths():
    started = time.monotonic()
    matrix = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
    assert abs(icc_2_1(matrix) - 8.0 / 9.0) <= 1e-12
    assert abs(icc_2_1(matrix) - oracle_icc_2_1(matrix)) <= 1e-12
    assert time.monotonic() - started < 1.0


def test_retrieval_matches_brute_force_scan(tmp_path):
    started = time.monotonic()
    rng = random.Random(7)
    vocab = [f"word{j:02d}" for j in range(40)]
    embedder = ReferenceEmbedder(dims=128)
    store = CorpusStore(tmp_path / "corpus.jsonl")
    index = VectorIndex(dims=128)
    candidates = []
    ids = []
    for i in range(100):
        text = " ".join(rng.choice(vocab) for _ in range(30)) + f" unique{i:03d}"
        doc_type = "exemplar_essay" if i % 2 == 0 else "instructor_feedback"
        doc = ingest_document(store, text, doc_type, f"doc{i:03d}.md")
        vector = embedder.embed(text)
        store.set_embedding(doc.id, vector)
        index.upsert(store.get(doc.id))
        candidates.append((doc.id, doc_type, list(vector.values)))
        ids.append(doc.id)

    filters = [
        (None, None),
        ({"exemplar_essay"}, QueryFilter(doc_types=frozenset({DocType.EXEMPLAR_ESSAY}))),
        ({"instructor_feedback"}, QueryFilter(doc_types=frozenset({DocType.INSTRUCTOR_FEEDBACK}))),
    ]
    for q in range(50):
        query = embedder.embed(" ".join(rng.choice(vocab) for _ in range(10)))
        allowed, query_filter = filters[q % len(filters)]
        expected = oracle_top_k(list(query.values), candidates, k=5, allowed_types=allowed)
        got = index.query(query, k=5, query_filter=query_filter)
        assert [r.doc_id for r in got] == [doc_id for doc_id, _sim in expected]
        assert [r.rank for r in got] == list(range(1, len(got) + 1))
        for r, (_doc_id, sim) in zip(got, expected):
            assert abs(r.similarity - sim) <= 1e-12

    stored = store.get(ids[17])
    hit = index.query(stored.embedding, k=1)[0]
    assert hit.doc_id == ids[17] and hit.rank == 1
    assert abs(hit.similarity - 1.0) <= 1e-9
    assert time.monotonic() - started < 5.0


def test_closed_loop_approval_feeds_retrieval(tmp_path):
    started = time.monotonic()
    engine, essays = build_loop_engine(tmp_path)
    indexed_before = len(engine.index)

    summary = engine.grade_batch(essays)
    assert summary.graded == 20 and summary.failed == 0
    pending = engine.review.list_pending()
    assert len(pending) == 20

    for assessment in pending:
        if assessment.submission_id == "essay-19":
            engine.review.reject(assessment.id, "rev-1", "Whole criterion misjudged.")
        else:
            engine.review.approve(assessment.id, "rev-1")

    assert engine.review.approval_rate() == 0.95
    assert len(engine.index) == indexed_before + 19

    held_out = engine.add_submission("held-out-student", essay_text(HELD_OUT_TOPIC))
    assessment = engine.grade_submission(held_out.id)
    feedback_ids = {
        doc.id
        for doc in engine.corpus.list(doc_type=DocType.APPROVED_FEEDBACK)
        if doc.provenance and doc.provenance.submission_id == "essay-05"
    }
    assert feedback_ids
    assert feedback_ids & {r.doc_id for r in assessment.evidence}
    assert time.monotonic() - started < 30.0


def test_two_runs_are_deterministic(tmp_path):
    started = time.monotonic()

    def scrub(record: dict) -> dict:
        out = copy.deepcopy(record)
        out["id"] = "ID"
        out["generated_at"] = "T"
        for entry in out["review_trail"]:
            entry["at"] = "T"
        return out

    first = [scrub(r) for r in run_loop(tmp_path / "run-a")]
    second = [scrub(r) for r in run_loop(tmp_path / "run-b")]
    assert len(first) == 20
    assert first == second
    assert time.monotonic() - started < 60.0


def test_every_invalid_transition_is_rejected(tmp_path):
    started = time.monotonic()
    script = {"*": [model_output(PROFILE_72)] * 3}
    engine = build_engine(tmp_path, script=script)
    engine.ingest_and_index(essay_text("baseline"), "exemplar_essay", "seed.md")
    targets = {}
    for name in ("approve-me", "reject-me", "edit-me"):
        submission = engine.add_submission(name, essay_text(name))
        targets[name] = engine.grade_submission(submission.id).id

    edited_scores = scores_from_profile(PROFILE_72)
    engine.review.approve(targets["approve-me"], "rev-1")
    engine.review.reject(targets["reject-me"], "rev-1", "Not grounded in the essay.")
    engine.review.edit_and_approve(targets["edit-me"], "rev-1", edited_scores, "Adjusted wording.")

    # Every action from a decided state must fail, whichever decision was taken.
    for assessment_id in targets.values():
        with pytest.raises(InvalidState):
            engine.review.approve(assessment_id, "rev-2")
        with pytest.raises(InvalidState):
            engine.review.reject(assessment_id, "rev-2", "Second thoughts.")
        with pytest.raises(InvalidState):
            engine.review.edit_and_approve(assessment_id, "rev-2", edited_scores, "Another pass.")
    assert time.monotonic() - started < 1.0
