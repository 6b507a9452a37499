/** Pending-review queue: one row per assessment awaiting a decision. */

import { ApiError, type ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import type { QueueItem } from "./model.js";

export interface QueueCallbacks {
  onOpen: (assessmentId: string) => void;
}

function row(item: QueueItem, callbacks: QueueCallbacks): HTMLTableRowElement {
  const open = el("button", { class: "open", type: "button" }, ["Review"]);
  open.addEventListener("click", () => callbacks.onOpen(item.assessment_id));
  const tr = el("tr", { "data-assessment-id": item.assessment_id, class: "queue-row" }, [
    el("td", { class: "student" }, [item.student_ref ?? "?"]),
    el("td", { class: "submission" }, [item.submission_id]),
    el("td", { class: "total" }, [item.total_percent.toFixed(1)]),
    el("td", { class: "generated" }, [item.generated_at]),
    el("td", { class: "length" }, [item.length_flag ? "length!" : ""]),
    el("td", { class: "cohort" }, [item.cohort ?? ""]),
    el("td", {}, [open]),
  ]);
  return tr;
}

function banner(container: HTMLElement, error: ApiError, retry: () => void): void {
  container.querySelector(".error-banner")?.remove();
  const retryButton = el("button", { class: "retry", type: "button" }, ["Retry"]);
  retryButton.addEventListener("click", retry);
  container.prepend(
    el("div", { class: "error-banner", role: "alert" }, [
      el("span", { class: "error-code" }, [error.code]),
      el("span", { class: "error-message" }, [` ${error.message} `]),
      retryButton,
    ]),
  );
}

/** Fetch and render the queue. On error the previous rows stay in place. */
export async function renderQueue(
  container: HTMLElement,
  client: ApiClient,
  callbacks: QueueCallbacks,
  cohort?: string,
): Promise<void> {
  let items: QueueItem[];
  try {
    items = await client.listPending(cohort);
  } catch (exc) {
    const error = exc instanceof ApiError ? exc : new ApiError("UnknownFailure", String(exc), 0);
    banner(container, error, () => void renderQueue(container, client, callbacks, cohort));
    return;
  }
  clear(container);
  items = [...items].sort((a, b) => a.generated_at.localeCompare(b.generated_at));
  if (items.length === 0) {
    container.append(el("p", { class: "empty-state" }, ["No assessments waiting for review."]));
    return;
  }
  const body = el("tbody", {}, items.map((item) => row(item, callbacks)));
  container.append(
    el("table", { class: "queue" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["Student"]),
          el("th", {}, ["Submission"]),
          el("th", {}, ["Total %"]),
          el("th", {}, ["Generated"]),
          el("th", {}, ["Flags"]),
          el("th", {}, ["Cohort"]),
          el("th", {}, [""]),
        ]),
      ]),
      body,
    ]),
  );
}
