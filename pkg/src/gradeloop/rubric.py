"""Weighted rubric model: criteria, performance bands, and score arithmetic.

Band ranges are stored as printed (e.g. 65-79) but interpreted as half-open
intervals [lo, next band's lo); the top band is closed at 100. Criterion
weights are percentages that must sum to 100, and the weighted total is
``sum(percent_i * weight_i / 100)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import (
    BandCoverageInvalid,
    BandPercentMismatch,
    DuplicateCriterion,
    ExtraCriterionScore,
    IoFailure,
    MissingCriterionScore,
    PercentOutOfRange,
    SchemaViolation,
    WeightSumInvalid,
)

WEIGHT_SUM_TOLERANCE = 1e-9


class BandLabel(str, Enum):
    EXCELLENT = "Excellent"
    GOOD = "Good"
    SATISFACTORY = "Satisfactory"
    NEEDS_IMPROVEMENT = "NeedsImprovement"


@dataclass(frozen=True)
class Band:
    label: BandLabel
    lo_percent: float
    hi_percent: float
    descriptor: str


@dataclass(frozen=True)
class Criterion:
    id: str
    name: str
    weight_percent: float
    bands: tuple[Band, ...]


@dataclass(frozen=True)
class Rubric:
    id: str
    title: str
    criteria: tuple[Criterion, ...]

    def criterion(self, criterion_id: str) -> Criterion | None:
        for criterion in self.criteria:
            if criterion.id == criterion_id:
                return criterion
        return None


@dataclass(frozen=True)
class CriterionScore:
    criterion_id: str
    band: BandLabel
    percent: float
    comment: str


def _sorted_bands(bands: Sequence[Band]) -> list[Band]:
    return sorted(bands, key=lambda b: b.lo_percent)


def effective_interval(bands: Sequence[Band], label: BandLabel) -> tuple[float, float, bool]:
    """Return (lo, hi, hi_inclusive) for a band under the half-open convention."""
    ordered = _sorted_bands(bands)
    for pos, band in enumerate(ordered):
        if band.label != label:
            continue
        if pos == len(ordered) - 1:
            return band.lo_percent, 100.0, True
        return band.lo_percent, ordered[pos + 1].lo_percent, False
    raise SchemaViolation("band", f"no band labelled {label!r}")


def label_for_percent(bands: Sequence[Band], percent: float) -> BandLabel:
    """Map a percent to exactly one band label."""
    if not 0.0 <= percent <= 100.0:
        raise PercentOutOfRange(f"percent {percent} outside 0..100")
    ordered = _sorted_bands(bands)
    for band, nxt in zip(ordered, ordered[1:]):
        if band.lo_percent <= percent < nxt.lo_percent:
            return band.label
    return ordered[-1].label


def percent_in_band(bands: Sequence[Band], label: BandLabel, percent: float) -> bool:
    lo, hi, inclusive = effective_interval(bands, label)
    if inclusive:
        return lo <= percent <= hi
    return lo <= percent < hi


def band_for_percent(criterion: Criterion, percent: float) -> BandLabel:
    return label_for_percent(criterion.bands, percent)


def validate_rubric(rubric: Rubric) -> None:
    """Check structural validity; raise with every violation listed."""
    problems: list[tuple[type, str]] = []

    seen: set[str] = set()
    for criterion in rubric.criteria:
        if criterion.id in seen:
            problems.append((DuplicateCriterion, f"criterion id {criterion.id!r} repeats"))
        seen.add(criterion.id)

    if not rubric.criteria:
        problems.append((WeightSumInvalid, "rubric has no criteria"))
    else:
        total = sum(c.weight_percent for c in rubric.criteria)
        if abs(total - 100.0) > WEIGHT_SUM_TOLERANCE:
            problems.append((WeightSumInvalid, f"weights sum to {total}, expected 100"))
        for criterion in rubric.criteria:
            if criterion.weight_percent <= 0:
                problems.append(
                    (WeightSumInvalid, f"{criterion.id}: weight {criterion.weight_percent} is not positive")
                )

    for criterion in rubric.criteria:
        problems.extend((BandCoverageInvalid, f"{criterion.id}: {msg}") for msg in _band_problems(criterion.bands))

    if problems:
        error_cls = problems[0][0]
        raise error_cls("; ".join(msg for _, msg in problems))


def _band_problems(bands: Sequence[Band]) -> list[str]:
    labels = [band.label for band in bands]
    problems: list[str] = []
    expected = set(BandLabel)
    if len(bands) != len(expected) or set(labels) != expected or len(set(labels)) != len(labels):
        problems.append("bands must carry each of the four labels exactly once")
    ordered = _sorted_bands(bands)
    if not ordered:
        return problems
    if ordered[0].lo_percent != 0:
        problems.append(f"lowest band starts at {ordered[0].lo_percent}, expected 0")
    if ordered[-1].hi_percent != 100:
        problems.append(f"highest band ends at {ordered[-1].hi_percent}, expected 100")
    for band in ordered:
        if band.lo_percent >= band.hi_percent:
            problems.append(f"band {band.label} has an empty range {band.lo_percent}..{band.hi_percent}")
    for band, nxt in zip(ordered, ordered[1:]):
        if band.hi_percent > nxt.lo_percent:
            problems.append(f"bands {band.label} and {nxt.label} overlap")
        # Printed ranges may leave a unit gap (e.g. 65-79 then 80-100); anything wider is a hole.
        elif band.hi_percent < nxt.lo_percent - 1:
            problems.append(f"gap between bands {band.label} and {nxt.label}")
    return problems


def validate_scores(rubric: Rubric, scores: Sequence[CriterionScore]) -> None:
    """Check a score set against a rubric: one valid score per criterion."""
    by_id: dict[str, CriterionScore] = {}
    for score in scores:
        if score.criterion_id in by_id:
            raise ExtraCriterionScore(f"criterion {score.criterion_id!r} scored twice")
        by_id[score.criterion_id] = score
    known = {c.id for c in rubric.criteria}
    for criterion_id in by_id:
        if criterion_id not in known:
            raise ExtraCriterionScore(f"score names unknown criterion {criterion_id!r}")
    for criterion in rubric.criteria:
        score = by_id.get(criterion.id)
        if score is None:
            raise MissingCriterionScore(f"criterion {criterion.id!r} has no score")
        if not 0.0 <= score.percent <= 100.0:
            raise PercentOutOfRange(f"{criterion.id}: percent {score.percent} outside 0..100")
        if not isinstance(score.comment, str) or not score.comment.strip():
            raise SchemaViolation("comment", f"criterion {criterion.id!r} has an empty comment")
        if not percent_in_band(criterion.bands, score.band, score.percent):
            lo, hi, inclusive = effective_interval(criterion.bands, score.band)
            edge = "]" if inclusive else ")"
            raise BandPercentMismatch(
                f"{criterion.id}: percent {score.percent} outside band {score.band.value} "
                f"[{lo}, {hi}{edge}",
                criterion_id=criterion.id,
            )


def weighted_total(rubric: Rubric, scores: Sequence[CriterionScore]) -> float:
    """Combine per-criterion percents into the overall percent."""
    validate_scores(rubric, scores)
    by_id = {score.criterion_id: score for score in scores}
    return sum(by_id[c.id].percent * c.weight_percent / 100.0 for c in rubric.criteria)


# --- wire format ---


def band_from_dict(raw: dict) -> Band:
    return Band(
        label=BandLabel(raw["label"]),
        lo_percent=float(raw["lo_percent"]),
        hi_percent=float(raw["hi_percent"]),
        descriptor=str(raw["descriptor"]),
    )


def rubric_from_dict(raw: dict) -> Rubric:
    criteria = tuple(
        Criterion(
            id=str(c["id"]),
            name=str(c["name"]),
            weight_percent=float(c["weight_percent"]),
            bands=tuple(band_from_dict(b) for b in c["bands"]),
        )
        for c in raw["criteria"]
    )
    return Rubric(id=str(raw["id"]), title=str(raw["title"]), criteria=criteria)


def rubric_to_dict(rubric: Rubric) -> dict:
    return {
        "id": rubric.id,
        "title": rubric.title,
        "criteria": [
            {
                "id": c.id,
                "name": c.name,
                "weight_percent": c.weight_percent,
                "bands": [
                    {
                        "label": b.label.value,
                        "lo_percent": b.lo_percent,
                        "hi_percent": b.hi_percent,
                        "descriptor": b.descriptor,
                    }
                    for b in c.bands
                ],
            }
            for c in rubric.criteria
        ],
    }


def load_rubric(path: Path) -> Rubric:
    """Load and validate a rubric from a JSON file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read rubric {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation("rubric", f"{path} is not valid JSON: {exc}") from exc
    rubric = rubric_from_dict(raw)
    validate_rubric(rubric)
    return rubric


def default_rubric() -> Rubric:
    """The built-in five-criterion engineering essay rubric."""
    raw = json.loads(resources.files("gradeloop.data").joinpath("default_rubric.json").read_text("utf-8"))
    rubric = rubric_from_dict(raw)
    validate_rubric(rubric)
    return rubric


def default_bands() -> tuple[Band, ...]:
    """The four overall performance bands shared by every default criterion."""
    return (
        Band(BandLabel.NEEDS_IMPROVEMENT, 0, 49, "Falls short of the expected standard"),
        Band(BandLabel.SATISFACTORY, 50, 64, "Meets the basic standard"),
        Band(BandLabel.GOOD, 65, 79, "Solid work above the basic standard"),
        Band(BandLabel.EXCELLENT, 80, 100, "Outstanding work"),
    )
