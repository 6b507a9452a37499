"""Shared fixtures: rubric profiles, scripted outputs, and engine builders."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from gradeloop import (
    BandLabel,
    CriterionScore,
    EmbeddingProviderConfig,
    Engine,
    LLMProviderConfig,
    LLMProviderKind,
    ServiceConfig,
    default_rubric,
)

# The five default criterion ids, in rubric order.
CRITERIA = [
    "problem_definition",
    "engineering_principles",
    "design_approach",
    "critical_reflection",
    "communication",
]

# A strong-essay profile whose weighted total is exactly 72.0.
PROFILE_72 = {
    "problem_definition": ("Excellent", 90),
    "engineering_principles": ("Satisfactory", 60),
    "design_approach": ("Good", 75),
    "critical_reflection": ("NeedsImprovement", 45),
    "communication": ("Excellent", 90),
}


def model_output(profile: dict, overall: str = "Competent work overall.", comments: dict | None = None) -> str:
    """Render a valid model response JSON for the default rubric."""
    entries = []
    for criterion_id, (band, percent) in profile.items():
        comment = (comments or {}).get(criterion_id, f"Assessment of {criterion_id} based on the evidence.")
        entries.append(
            {"criterion_id": criterion_id, "band": band, "percent": percent, "comment": comment}
        )
    return json.dumps({"criteria": entries, "overall_comment": overall})


def scores_from_profile(profile: dict) -> list[CriterionScore]:
    return [
        CriterionScore(criterion_id=cid, band=BandLabel(band), percent=float(percent), comment=f"note on {cid}")
        for cid, (band, percent) in profile.items()
    ]


@pytest.fixture
def rubric():
    return default_rubric()


def build_config(base: Path, script: dict | None = None, **overrides) -> ServiceConfig:
    """Service config rooted in a temp directory with a scripted provider."""
    script_path = base / "script.json"
    script_path.write_text(json.dumps(script or {}), encoding="utf-8")
    defaults = dict(
        corpus_path=base / "corpus.jsonl",
        index_path=base / "index.jsonl",
        assessment_store_path=base / "assessments.jsonl",
        submission_store_path=base / "submissions.jsonl",
        embedding=EmbeddingProviderConfig(dims=64),
        llm=LLMProviderConfig(kind=LLMProviderKind.SCRIPTED, script_path=script_path),
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


def build_engine(base: Path, script: dict | None = None, **overrides) -> Engine:
    return Engine(build_config(base, script, **overrides))


def pytest_runtest_logreport(report):
    """Print one PASS/FAIL line per acceptance criterion test."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    outcome = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\n[{outcome}] {name} ({report.duration:.2f}s)")
