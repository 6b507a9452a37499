"""Agreement and error statistics for machine-versus-human score pairs.

All spreads use the sample (n-1) standard deviation. Statistics that are
undefined for a dataset raise; the report builder catches those and records
the metric as absent rather than guessing.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import (
    DegenerateMarginals,
    EmptyInput,
    InsufficientData,
    LengthMismatch,
    PercentOutOfRange,
    ZeroVariance,
)
from .rubric import Band, BandLabel, default_bands, label_for_percent


def _require_paired(a: Sequence, b: Sequence, what: str) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"{what}: {len(a)} vs {len(b)} values")
    if not a:
        raise EmptyInput(f"{what}: no values")


def cohens_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> float:
    """Cohen's kappa: (p_o - p_e) / (1 - p_e).

    p_o is the observed agreement rate and p_e the chance rate implied by the
    two raters' marginal label distributions.
    """
    _require_paired(labels_a, labels_b, "kappa")
    n = len(labels_a)
    categories = sorted(set(labels_a) | set(labels_b), key=repr)
    marginal_a = {c: labels_a.count(c) / n for c in categories}
    marginal_b = {c: labels_b.count(c) / n for c in categories}
    p_o = sum(1 for x, y in zip(labels_a, labels_b) if x == y) / n
    p_e = sum(marginal_a[c] * marginal_b[c] for c in categories)
    if p_e == 1.0:
        raise DegenerateMarginals("both raters used a single identical category")
    return (p_o - p_e) / (1.0 - p_e)


def icc_2_1(matrix: Sequence[Sequence[float]]) -> float:
    """ICC(2,1), two-way random effects, absolute agreement, single rater.

    From the two-way ANOVA decomposition over n subjects and k raters:
    ICC = (MS_R - MS_E) / (MS_R + (k-1) MS_E + (k/n)(MS_C - MS_E)).
    """
    n = len(matrix)
    if n < 2:
        raise InsufficientData(f"ICC needs at least 2 subjects, got {n}")
    k = len(matrix[0])
    if k < 2:
        raise InsufficientData(f"ICC needs at least 2 raters, got {k}")
    if any(len(row) != k for row in matrix):
        raise LengthMismatch("ICC matrix rows have unequal lengths")

    grand = sum(sum(row) for row in matrix) / (n * k)
    row_means = [sum(row) / k for row in matrix]
    col_means = [sum(matrix[i][j] for i in range(n)) / n for j in range(k)]

    ms_rows = k * sum((m - grand) ** 2 for m in row_means) / (n - 1)
    ms_cols = n * sum((m - grand) ** 2 for m in col_means) / (k - 1)
    ss_error = sum(
        (matrix[i][j] - row_means[i] - col_means[j] + grand) ** 2
        for i in range(n)
        for j in range(k)
    )
    ms_error = ss_error / ((n - 1) * (k - 1))

    denominator = ms_rows + (k - 1) * ms_error + (k / n) * (ms_cols - ms_error)
    if denominator == 0:
        raise ZeroVariance("ICC denominator is zero; scores show no variation")
    return (ms_rows - ms_error) / denominator


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation: centered covariance over the product of spreads."""
    _require_paired(x, y, "pearson")
    if len(x) < 2:
        raise InsufficientData("pearson needs at least 2 pairs")
    mean_x = statistics.fmean(x)
    mean_y = statistics.fmean(y)
    cov = sum((a - mean_x) * (b - mean_y) for a, b in zip(x, y))
    var_x = sum((a - mean_x) ** 2 for a in x)
    var_y = sum((b - mean_y) ** 2 for b in y)
    if var_x == 0 or var_y == 0:
        raise ZeroVariance("pearson is undefined when either sequence is constant")
    return cov / math.sqrt(var_x * var_y)


def mae_rmse(human: Sequence[float], machine: Sequence[float]) -> tuple[float, float]:
    """Mean absolute error and root mean squared error of machine vs human."""
    _require_paired(human, machine, "error metrics")
    diffs = [m - h for h, m in zip(human, machine)]
    mae = sum(abs(d) for d in diffs) / len(diffs)
    rmse = math.sqrt(sum(d * d for d in diffs) / len(diffs))
    return mae, rmse


@dataclass(frozen=True)
class BlandAltman:
    mean_diff: float
    sd_diff: float
    loa_lower: float
    loa_upper: float

    def to_record(self) -> dict:
        return {
            "mean_diff": self.mean_diff,
            "sd_diff": self.sd_diff,
            "loa_lower": self.loa_lower,
            "loa_upper": self.loa_upper,
        }


def bland_altman(human: Sequence[float], machine: Sequence[float]) -> BlandAltman:
    """Bias and 95% limits of agreement for machine minus human differences.

    LoA = mean(diff) +/- 1.96 * sd(diff) with the sample (n-1) deviation.
    """
    _require_paired(human, machine, "bland-altman")
    if len(human) < 2:
        raise InsufficientData("bland-altman needs at least 2 pairs")
    diffs = [m - h for h, m in zip(human, machine)]
    mean_diff = statistics.fmean(diffs)
    sd_diff = statistics.stdev(diffs)
    return BlandAltman(
        mean_diff=mean_diff,
        sd_diff=sd_diff,
        loa_lower=mean_diff - 1.96 * sd_diff,
        loa_upper=mean_diff + 1.96 * sd_diff,
    )


def bin_to_bands(scores: Sequence[float], bands: Sequence[Band] | None = None) -> list[BandLabel]:
    """Map percent scores onto performance band labels."""
    chosen = tuple(bands) if bands is not None else default_bands()
    for score in scores:
        if not 0.0 <= score <= 100.0:
            raise PercentOutOfRange(f"score {score} outside 0..100")
    return [label_for_percent(chosen, score) for score in scores]


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    sd: float
    min: float
    max: float

    def to_record(self) -> dict:
        return {"mean": self.mean, "sd": self.sd, "min": self.min, "max": self.max}


def describe(values: Sequence[float]) -> DescriptiveStats:
    """Mean, sample SD, min, and max of a sequence."""
    if not values:
        raise EmptyInput("describe: no values")
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return DescriptiveStats(
        mean=statistics.fmean(values),
        sd=sd,
        min=min(values),
        max=max(values),
    )


@dataclass(frozen=True)
class PairedScores:
    """Human (rater_a) and machine (rater_b) percent scores, row-aligned."""

    rater_a: tuple[float, ...]
    rater_b: tuple[float, ...]
    ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.rater_a) != len(self.rater_b):
            raise LengthMismatch(f"paired scores: {len(self.rater_a)} vs {len(self.rater_b)}")
        if self.ids and len(self.ids) != len(self.rater_a):
            raise LengthMismatch("paired scores: ids do not align with values")
        for value in (*self.rater_a, *self.rater_b):
            if not 0.0 <= value <= 100.0:
                raise PercentOutOfRange(f"score {value} outside 0..100")

    def __len__(self) -> int:
        return len(self.rater_a)


def load_pairs_csv(text: str) -> PairedScores:
    """Parse an ``id,rater_a,rater_b`` CSV into paired scores."""
    reader = csv.DictReader(io.StringIO(text))
    required = {"id", "rater_a", "rater_b"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise LengthMismatch("CSV must have header columns id, rater_a, rater_b")
    ids: list[str] = []
    a: list[float] = []
    b: list[float] = []
    for row in reader:
        ids.append(row["id"])
        try:
            a.append(float(row["rater_a"]))
            b.append(float(row["rater_b"]))
        except (TypeError, ValueError) as exc:
            raise LengthMismatch(f"row {row['id']!r} has a non-numeric score") from exc
    if not ids:
        raise EmptyInput("CSV has no data rows")
    return PairedScores(rater_a=tuple(a), rater_b=tuple(b), ids=tuple(ids))


@dataclass(frozen=True)
class ReliabilityReport:
    n: int
    kappa: float | None
    icc_2_1: float | None
    pearson_r: float | None
    mae: float | None
    rmse: float | None
    bland_altman: BlandAltman | None
    approval_rate: float | None
    descriptive_a: DescriptiveStats
    descriptive_b: DescriptiveStats

    def to_record(self) -> dict:
        record = {
            "n": self.n,
            "kappa": self.kappa,
            "icc_2_1": self.icc_2_1,
            "pearson_r": self.pearson_r,
            "mae": self.mae,
            "rmse": self.rmse,
            "bland_altman": self.bland_altman.to_record() if self.bland_altman else None,
            "approval_rate": self.approval_rate,
            "descriptive_a": self.descriptive_a.to_record(),
            "descriptive_b": self.descriptive_b.to_record(),
        }
        record["display"] = _display_block(record)
        return record


def _round2(value: float | None) -> float | None:
    return None if value is None else round(value, 2)


def _display_block(record: dict) -> dict:
    ba = record["bland_altman"]
    return {
        "n": record["n"],
        "kappa": _round2(record["kappa"]),
        "icc_2_1": _round2(record["icc_2_1"]),
        "pearson_r": _round2(record["pearson_r"]),
        "mae": _round2(record["mae"]),
        "rmse": _round2(record["rmse"]),
        "bland_altman": None
        if ba is None
        else {key: _round2(value) for key, value in ba.items()},
        "approval_rate": _round2(record["approval_rate"]),
        "descriptive_a": {key: _round2(value) for key, value in record["descriptive_a"].items()},
        "descriptive_b": {key: _round2(value) for key, value in record["descriptive_b"].items()},
    }


def reliability_report(
    pairs: PairedScores,
    bands: Sequence[Band] | None = None,
    approval_rate: float | None = None,
) -> ReliabilityReport:
    """Run the full agreement battery over paired scores.

    Metrics that are undefined for the data (constant scores, degenerate
    marginals, too few pairs) come back as None rather than failing the run.
    """
    if len(pairs) < 2:
        raise InsufficientData(f"reliability report needs at least 2 pairs, got {len(pairs)}")
    a = list(pairs.rater_a)
    b = list(pairs.rater_b)

    try:
        kappa = cohens_kappa(bin_to_bands(a, bands), bin_to_bands(b, bands))
    except DegenerateMarginals:
        kappa = None
    try:
        icc = icc_2_1([[x, y] for x, y in zip(a, b)])
    except (ZeroVariance, InsufficientData):
        icc = None
    try:
        r = pearson_r(a, b)
    except (ZeroVariance, InsufficientData):
        r = None
    mae, rmse = mae_rmse(a, b)
    ba = bland_altman(a, b)

    return ReliabilityReport(
        n=len(pairs),
        kappa=kappa,
        icc_2_1=icc,
        pearson_r=r,
        mae=mae,
        rmse=rmse,
        bland_altman=ba,
        approval_rate=approval_rate,
        descriptive_a=describe(a),
        descriptive_b=describe(b),
    )
