/** API payload types and the pure scoring logic mirrored from the service.
 *
 * Everything computed here is a preview for the reviewer; the persisted total
 * always comes back from the server.
 */

export type BandLabel = "Excellent" | "Good" | "Satisfactory" | "NeedsImprovement";

export const BAND_LABELS: readonly BandLabel[] = [
  "Excellent",
  "Good",
  "Satisfactory",
  "NeedsImprovement",
];

export interface Band {
  label: BandLabel;
  lo_percent: number;
  hi_percent: number;
  descriptor: string;
}

export interface Criterion {
  id: string;
  name: string;
  weight_percent: number;
  bands: Band[];
}

export interface Rubric {
  id: string;
  title: string;
  criteria: Criterion[];
}

export interface CriterionScore {
  criterion_id: string;
  band: BandLabel;
  percent: number;
  comment: string;
}

export interface QueueItem {
  assessment_id: string;
  submission_id: string;
  student_ref: string | null;
  total_percent: number;
  generated_at: string;
  length_flag: boolean | null;
  cohort: string | null;
  status: string;
}

export interface EvidenceItem {
  doc_id: string;
  doc_type: string;
  similarity: number;
  rank: number;
  text: string | null;
  source_name: string | null;
}

export interface AssessmentRecord {
  id: string;
  submission_id: string;
  rubric_id: string;
  criterion_scores: CriterionScore[];
  overall_comment: string;
  total_percent: number;
  generated_at: string;
  model_label: string;
  status: string;
}

export interface SubmissionRecord {
  id: string;
  student_ref: string;
  essay_text: string;
  word_count: number;
  submitted_at: string;
  cohort: string | null;
  length_flag?: boolean;
}

export interface AssessmentDetail {
  assessment: AssessmentRecord;
  submission: SubmissionRecord | null;
  evidence: EvidenceItem[];
  rubric: Rubric;
}

export interface BlandAltmanStats {
  mean_diff: number;
  sd_diff: number;
  loa_lower: number;
  loa_upper: number;
}

export interface ScorePair {
  id: string;
  human: number;
  machine: number;
}

export interface ReliabilityPayload {
  n: number;
  kappa: number | null;
  icc_2_1: number | null;
  pearson_r: number | null;
  mae: number | null;
  rmse: number | null;
  bland_altman: BlandAltmanStats | null;
  approval_rate: number | null;
  unmatched: number;
  pairs: ScorePair[];
}

/** [lo, hi, hi inclusive] for a band; intervals are half-open except the top one. */
export function effectiveInterval(criterion: Criterion, label: BandLabel): [number, number, boolean] {
  const ordered = [...criterion.bands].sort((a, b) => a.lo_percent - b.lo_percent);
  const pos = ordered.findIndex((b) => b.label === label);
  if (pos < 0) {
    throw new Error(`criterion ${criterion.id} has no band ${label}`);
  }
  const band = ordered[pos]!;
  const next = ordered[pos + 1];
  return next === undefined ? [band.lo_percent, 100, true] : [band.lo_percent, next.lo_percent, false];
}

export function percentInBand(criterion: Criterion, label: BandLabel, percent: number): boolean {
  const [lo, hi, inclusive] = effectiveInterval(criterion, label);
  return percent >= lo && (inclusive ? percent <= hi : percent < hi);
}

/** Inline error text for one edited row, or null when the row is consistent. */
export function scoreProblem(criterion: Criterion, label: BandLabel, percent: number): string | null {
  if (!Number.isFinite(percent) || percent < 0 || percent > 100) {
    return "percent must be between 0 and 100";
  }
  if (!percentInBand(criterion, label, percent)) {
    const [lo, hi, inclusive] = effectiveInterval(criterion, label);
    return `${percent} is outside ${label} (${lo} to ${hi}${inclusive ? "" : ", exclusive"})`;
  }
  return null;
}

/** Weighted total preview: sum of percent x weight / 100 across criteria. */
export function weightedTotalPreview(rubric: Rubric, scores: CriterionScore[]): number {
  const byId = new Map(scores.map((s) => [s.criterion_id, s]));
  let total = 0;
  for (const criterion of rubric.criteria) {
    const score = byId.get(criterion.id);
    if (score === undefined) {
      throw new Error(`missing score for ${criterion.id}`);
    }
    total += (score.percent * criterion.weight_percent) / 100;
  }
  return total;
}

/** Metric text for report cells; absent metrics must never render as zero. */
export function formatMetric(value: number | null | undefined, digits = 2): string {
  if (value === null || value === undefined) {
    return "not available";
  }
  return value.toFixed(digits);
}
