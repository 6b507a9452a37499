/** In-memory stand-in for the grading service: a fetch-compatible function
 * that serves the same payload shapes and mutates state on decisions.
 */

import type { FetchLike } from "../src/api.js";
import type {
  AssessmentDetail,
  BandLabel,
  CriterionScore,
  QueueItem,
  ReliabilityPayload,
  Rubric,
} from "../src/model.js";

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

export interface FixtureState {
  assessments: Map<string, AssessmentDetail>;
  reliability: ReliabilityPayload;
  calls: RecordedCall[];
  failNext: { status: number; code: string; message: string } | null;
}

const BANDS: [BandLabel, number, number][] = [
  ["Excellent", 80, 100],
  ["Good", 65, 79],
  ["Satisfactory", 50, 64],
  ["NeedsImprovement", 0, 49],
];

export function makeRubric(): Rubric {
  const weights: [string, string, number][] = [
    ["problem_definition", "Problem Definition and Understanding", 20],
    ["engineering_principles", "Application of Engineering Principles", 25],
    ["design_approach", "Design Approach and Justification", 25],
    ["critical_reflection", "Critical Reflection", 15],
    ["communication", "Communication and Structure", 15],
  ];
  return {
    id: "engineering-essay-v1",
    title: "Engineering Essay Rubric",
    criteria: weights.map(([id, name, weight]) => ({
      id,
      name,
      weight_percent: weight,
      bands: BANDS.map(([label, lo, hi]) => ({
        label,
        lo_percent: lo,
        hi_percent: hi,
        descriptor: `${label} work on ${name.toLowerCase()}`,
      })),
    })),
  };
}

const PROFILE: [string, BandLabel, number][] = [
  ["problem_definition", "Excellent", 90],
  ["engineering_principles", "Satisfactory", 60],
  ["design_approach", "Good", 75],
  ["critical_reflection", "NeedsImprovement", 45],
  ["communication", "Excellent", 90],
];

export function makeDetail(
  assessmentId: string,
  overrides: { generatedAt?: string; status?: string; studentRef?: string } = {},
): AssessmentDetail {
  const scores: CriterionScore[] = PROFILE.map(([criterion_id, band, percent]) => ({
    criterion_id,
    band,
    percent,
    comment: `Notes on ${criterion_id}.`,
  }));
  return {
    assessment: {
      id: assessmentId,
      submission_id: `sub-${assessmentId}`,
      rubric_id: "engineering-essay-v1",
      criterion_scores: scores,
      overall_comment: "Competent work overall.",
      total_percent: 72.0,
      generated_at: overrides.generatedAt ?? "2026-08-14T10:00:00Z",
      model_label: "scripted",
      status: overrides.status ?? "pending_review",
    },
    submission: {
      id: `sub-${assessmentId}`,
      student_ref: overrides.studentRef ?? `student-${assessmentId}`,
      essay_text: "This essay examines load paths in depth and reflects on safety margins.",
      word_count: 880,
      submitted_at: "2026-08-14T09:00:00Z",
      cohort: "s1",
      length_flag: false,
    },
    evidence: [
      {
        doc_id: "doc-aaa111",
        doc_type: "exemplar_essay",
        similarity: 0.9132,
        rank: 1,
        text: "An exemplar discussing load paths.",
        source_name: "exemplar.md",
      },
      {
        doc_id: "doc-bbb222",
        doc_type: "approved_feedback",
        similarity: 0.8217,
        rank: 2,
        text: "Feedback approved for a similar essay.",
        source_name: "feedback",
      },
    ],
    rubric: makeRubric(),
  };
}

export function makeReliability(overrides: Partial<ReliabilityPayload> = {}): ReliabilityPayload {
  return {
    n: 3,
    kappa: 0.61,
    icc_2_1: 0.7,
    pearson_r: 0.88,
    mae: 2.4,
    rmse: 3.1,
    bland_altman: { mean_diff: -1.8, sd_diff: 3.2653, loa_lower: -8.2, loa_upper: 4.6 },
    approval_rate: 0.95,
    unmatched: 0,
    pairs: [
      { id: "sub-1", human: 70, machine: 68 },
      { id: "sub-2", human: 55, machine: 54 },
      { id: "sub-3", human: 81, machine: 79 },
    ],
    ...overrides,
  };
}

export function makeState(details: AssessmentDetail[] = [], reliability?: ReliabilityPayload): FixtureState {
  return {
    assessments: new Map(details.map((d) => [d.assessment.id, d])),
    reliability: reliability ?? makeReliability(),
    calls: [],
    failNext: null,
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function apiError(status: number, code: string, message: string): Response {
  return json(status, { error: { code, message } });
}

function queueItem(detail: AssessmentDetail): QueueItem {
  return {
    assessment_id: detail.assessment.id,
    submission_id: detail.assessment.submission_id,
    student_ref: detail.submission?.student_ref ?? null,
    total_percent: detail.assessment.total_percent,
    generated_at: detail.assessment.generated_at,
    length_flag: detail.submission?.length_flag ?? null,
    cohort: detail.submission?.cohort ?? null,
    status: detail.assessment.status,
  };
}

function recompute(rubric: Rubric, scores: CriterionScore[]): number {
  let total = 0;
  for (const criterion of rubric.criteria) {
    const score = scores.find((s) => s.criterion_id === criterion.id);
    total += ((score?.percent ?? 0) * criterion.weight_percent) / 100;
  }
  return total;
}

export function fixtureFetch(state: FixtureState): FetchLike {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://fixture");
    const path = url.pathname;
    const body = typeof init?.body === "string" ? (JSON.parse(init.body) as unknown) : undefined;
    state.calls.push({ method, path, body });

    if (state.failNext !== null) {
      const failure = state.failNext;
      state.failNext = null;
      return apiError(failure.status, failure.code, failure.message);
    }

    if (method === "GET" && path === "/api/assessments") {
      const wanted = url.searchParams.get("status");
      const items = [...state.assessments.values()]
        .filter((d) => wanted === null || d.assessment.status === wanted)
        .map(queueItem)
        .sort((a, b) => a.generated_at.localeCompare(b.generated_at));
      return json(200, items);
    }

    const detailMatch = path.match(/^\/api\/assessments\/([^/]+)$/);
    if (method === "GET" && detailMatch) {
      const detail = state.assessments.get(detailMatch[1]!);
      return detail
        ? json(200, detail)
        : apiError(404, "NotFound", `no assessment ${detailMatch[1]}`);
    }

    const actionMatch = path.match(/^\/api\/assessments\/([^/]+)\/(approve|edit|reject)$/);
    if (method === "POST" && actionMatch) {
      const detail = state.assessments.get(actionMatch[1]!);
      if (!detail) {
        return apiError(404, "NotFound", `no assessment ${actionMatch[1]}`);
      }
      if (detail.assessment.status !== "pending_review") {
        return apiError(409, "InvalidState", `assessment is ${detail.assessment.status}`);
      }
      const action = actionMatch[2]!;
      if (action === "approve") {
        detail.assessment.status = "approved";
        return json(200, { assessment_id: detail.assessment.id, status: "approved", document_id: "doc-fix" });
      }
      if (action === "edit") {
        const payload = body as { criterion_scores: CriterionScore[]; overall_comment: string };
        detail.assessment.criterion_scores = payload.criterion_scores;
        detail.assessment.overall_comment = payload.overall_comment;
        detail.assessment.total_percent = recompute(detail.rubric, payload.criterion_scores);
        detail.assessment.status = "approved";
        return json(200, {
          assessment_id: detail.assessment.id,
          status: "approved",
          total_percent: detail.assessment.total_percent,
          document_id: "doc-fix",
        });
      }
      detail.assessment.status = "rejected";
      return json(200, { assessment_id: detail.assessment.id, status: "rejected" });
    }

    if (method === "GET" && path === "/api/reports/reliability") {
      return json(200, state.reliability);
    }

    return apiError(404, "NotFound", `${method} ${path} has no fixture route`);
  };
}
