/** Thin typed client over the grading service HTTP API. */

import type {
  AssessmentDetail,
  CriterionScore,
  QueueItem,
  ReliabilityPayload,
  Rubric,
} from "./model.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private token: string | null = null,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = { ...(init.headers as Record<string, string> | undefined) };
    if (init.body !== undefined && headers["content-type"] === undefined) {
      headers["content-type"] = "application/json";
    }
    if (this.token) {
      headers["authorization"] = `Bearer ${this.token}`;
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    } catch (exc) {
      throw new ApiError("NetworkFailure", String(exc), 0);
    }
    if (!response.ok) {
      let code = "HttpError";
      let message = `${response.status}`;
      try {
        const body = (await response.json()) as { error?: { code?: string; message?: string } };
        if (body.error?.code) {
          code = body.error.code;
        }
        if (body.error?.message) {
          message = body.error.message;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  rubric(): Promise<Rubric> {
    return this.request("/api/rubric");
  }

  listPending(cohort?: string): Promise<QueueItem[]> {
    const params = new URLSearchParams({ status: "pending_review" });
    if (cohort) {
      params.set("cohort", cohort);
    }
    return this.request(`/api/assessments?${params.toString()}`);
  }

  getAssessment(assessmentId: string): Promise<AssessmentDetail> {
    return this.request(`/api/assessments/${encodeURIComponent(assessmentId)}`);
  }

  approve(assessmentId: string, reviewerId: string): Promise<{ status: string }> {
    return this.request(`/api/assessments/${encodeURIComponent(assessmentId)}/approve`, {
      method: "POST",
      body: JSON.stringify({ reviewer_id: reviewerId }),
    });
  }

  edit(
    assessmentId: string,
    reviewerId: string,
    scores: CriterionScore[],
    overallComment: string,
  ): Promise<{ status: string; total_percent: number }> {
    return this.request(`/api/assessments/${encodeURIComponent(assessmentId)}/edit`, {
      method: "POST",
      body: JSON.stringify({
        reviewer_id: reviewerId,
        criterion_scores: scores,
        overall_comment: overallComment,
      }),
    });
  }

  reject(
    assessmentId: string,
    reviewerId: string,
    reason: string,
    requestRegeneration = false,
  ): Promise<{ status: string }> {
    return this.request(`/api/assessments/${encodeURIComponent(assessmentId)}/reject`, {
      method: "POST",
      body: JSON.stringify({
        reviewer_id: reviewerId,
        reason,
        request_regeneration: requestRegeneration,
      }),
    });
  }

  reliability(cohort?: string): Promise<ReliabilityPayload> {
    const params = new URLSearchParams();
    if (cohort) {
      params.set("cohort", cohort);
    }
    const suffix = params.size > 0 ? `?${params.toString()}` : "";
    return this.request(`/api/reports/reliability${suffix}`);
  }
}
