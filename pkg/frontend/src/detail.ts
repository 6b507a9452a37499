/** Assessment detail: essay and evidence side by side with the editable
 * per-criterion scores and the decision controls.
 *
 * The total shown while editing is a preview only; the stored total always
 * comes from the server after a decision.
 */

import { ApiError, type ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import {
  BAND_LABELS,
  scoreProblem,
  weightedTotalPreview,
  type AssessmentDetail,
  type BandLabel,
  type Criterion,
  type CriterionScore,
} from "./model.js";

export interface DetailOptions {
  reviewerId: string;
  onDone: () => void;
}

interface Row {
  criterion: Criterion;
  band: HTMLSelectElement;
  percent: HTMLInputElement;
  comment: HTMLTextAreaElement;
  error: HTMLElement;
  original: CriterionScore;
}

function evidenceBlock(detail: AssessmentDetail): HTMLElement {
  const blocks = detail.evidence.map((item) =>
    el("article", { class: "evidence", "data-doc-id": item.doc_id }, [
      el("h4", {}, [`[${item.doc_type}] ${item.doc_id} (similarity ${item.similarity.toFixed(4)})`]),
      el("p", { class: "evidence-text" }, [item.text ?? "(text unavailable)"]),
    ]),
  );
  return el("section", { class: "evidence-list" }, [el("h3", {}, ["Evidence used"]), ...blocks]);
}

function criterionRow(criterion: Criterion, score: CriterionScore): Row {
  const band = el("select", { class: "band" });
  for (const label of BAND_LABELS) {
    const option = el("option", { value: label }, [label]);
    if (label === score.band) {
      option.selected = true;
    }
    band.append(option);
  }
  const percent = el("input", { class: "percent", type: "number", min: "0", max: "100", step: "any" });
  percent.value = String(score.percent);
  const comment = el("textarea", { class: "comment" });
  comment.value = score.comment;
  const error = el("div", { class: "validation-error", hidden: "" });
  return { criterion, band, percent, comment, error, original: score };
}

function rowScore(row: Row): CriterionScore {
  return {
    criterion_id: row.criterion.id,
    band: row.band.value as BandLabel,
    percent: Number(row.percent.value),
    comment: row.comment.value,
  };
}

function rowDirty(row: Row): boolean {
  const current = rowScore(row);
  return (
    current.band !== row.original.band ||
    current.percent !== row.original.percent ||
    current.comment !== row.original.comment
  );
}

export async function renderDetail(
  container: HTMLElement,
  client: ApiClient,
  assessmentId: string,
  options: DetailOptions,
): Promise<void> {
  let detail: AssessmentDetail;
  try {
    detail = await client.getAssessment(assessmentId);
  } catch (exc) {
    clear(container);
    const error = exc instanceof ApiError ? exc : new ApiError("UnknownFailure", String(exc), 0);
    container.append(
      el("div", { class: "error-banner", role: "alert" }, [
        el("span", { class: "error-code" }, [error.code]),
        el("span", { class: "error-message" }, [` ${error.message}`]),
      ]),
    );
    return;
  }
  clear(container);

  const assessment = detail.assessment;
  const submission = detail.submission;
  const preview = el("span", { id: "total-preview", "data-total": String(assessment.total_percent) }, [
    assessment.total_percent.toFixed(2),
  ]);
  container.append(
    el("header", { class: "assessment-header" }, [
      el("h2", {}, [`${assessment.submission_id} (${submission?.student_ref ?? "?"})`]),
      el("p", {}, [
        `status ${assessment.status}, graded by ${assessment.model_label} at ${assessment.generated_at}; total `,
        preview,
      ]),
    ]),
  );

  const words = submission?.word_count ?? 0;
  container.append(
    el("section", { class: "essay" }, [
      el("h3", {}, [`Essay (${words} words)${submission?.length_flag ? " - outside expected length" : ""}`]),
      el("pre", { class: "essay-text" }, [submission?.essay_text ?? "(submission missing)"]),
    ]),
  );
  container.append(evidenceBlock(detail));

  const rows: Row[] = [];
  const scoreById = new Map(assessment.criterion_scores.map((s) => [s.criterion_id, s]));
  const form = el("form", { class: "scores" });
  for (const criterion of detail.rubric.criteria) {
    const score = scoreById.get(criterion.id);
    if (score === undefined) {
      continue;
    }
    const row = criterionRow(criterion, score);
    rows.push(row);
    form.append(
      el("fieldset", { class: "criterion-row", "data-criterion-id": criterion.id }, [
        el("legend", {}, [`${criterion.name} (weight ${criterion.weight_percent}%)`]),
        row.band,
        row.percent,
        row.comment,
        row.error,
      ]),
    );
  }
  const overall = el("textarea", { class: "overall" });
  overall.value = assessment.overall_comment;
  form.append(el("label", {}, ["Overall comment", overall]));
  container.append(form);

  const approveButton = el("button", { class: "approve", type: "button" }, ["Approve as graded"]);
  const saveButton = el("button", { class: "save-approve", type: "button" }, ["Save edits & approve"]);
  const rejectReason = el("input", { class: "reject-reason", type: "text", placeholder: "Reason" });
  const regenerate = el("input", { class: "regenerate", type: "checkbox" });
  const rejectButton = el("button", { class: "reject", type: "button" }, ["Reject"]);
  const decisionError = el("div", { class: "decision-error", hidden: "" });
  container.append(
    el("div", { class: "decision" }, [
      approveButton,
      saveButton,
      rejectButton,
      rejectReason,
      el("label", {}, [regenerate, "request regrade"]),
      decisionError,
    ]),
  );

  const refresh = (): void => {
    let blocked = false;
    let dirty = overall.value !== assessment.overall_comment;
    for (const row of rows) {
      const current = rowScore(row);
      const problem = scoreProblem(row.criterion, current.band, current.percent);
      if (problem === null) {
        row.error.hidden = true;
        row.error.textContent = "";
      } else {
        row.error.hidden = false;
        row.error.textContent = problem;
        blocked = true;
      }
      dirty = dirty || rowDirty(row);
    }
    if (!blocked) {
      const total = weightedTotalPreview(
        detail.rubric,
        rows.map((row) => rowScore(row)),
      );
      preview.textContent = total.toFixed(2);
      preview.setAttribute("data-total", String(total));
    }
    saveButton.disabled = blocked;
    // Plain approval records the scores as graded, so block it once edited.
    approveButton.disabled = dirty;
  };
  form.addEventListener("input", refresh);
  refresh();

  const decide = async (call: () => Promise<unknown>): Promise<void> => {
    decisionError.hidden = true;
    try {
      await call();
    } catch (exc) {
      if (exc instanceof ApiError && exc.status === 409) {
        // Decided elsewhere; refetch so the view reflects the stored state.
        await renderDetail(container, client, assessmentId, options);
        return;
      }
      const error = exc instanceof ApiError ? exc : new ApiError("UnknownFailure", String(exc), 0);
      decisionError.hidden = false;
      decisionError.textContent = `${error.code}: ${error.message}`;
      return;
    }
    options.onDone();
  };

  approveButton.addEventListener("click", () => {
    void decide(() => client.approve(assessmentId, options.reviewerId));
  });
  saveButton.addEventListener("click", () => {
    void decide(() =>
      client.edit(
        assessmentId,
        options.reviewerId,
        rows.map((row) => rowScore(row)),
        overall.value,
      ),
    );
  });
  rejectButton.addEventListener("click", () => {
    void decide(() => client.reject(assessmentId, options.reviewerId, rejectReason.value, regenerate.checked));
  });
}
