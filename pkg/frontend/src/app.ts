/** Shell: token entry, tab switching, and the 10-second queue poll. */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { renderDetail } from "./detail.js";
import { renderQueue } from "./queue.js";
import { renderReliability } from "./reliability.js";

const POLL_MS = 10_000;

export function mountApp(root: HTMLElement, baseUrl = ""): void {
  const client = new ApiClient(baseUrl);
  const tokenInput = el("input", { type: "password", placeholder: "API token (optional)" });
  const reviewerInput = el("input", { type: "text", placeholder: "Reviewer id", value: "reviewer" });
  const queueTab = el("button", { type: "button" }, ["Queue"]);
  const reportTab = el("button", { type: "button" }, ["Reliability"]);
  const view = el("main", { class: "view" });

  let poll: number | undefined;
  const stopPolling = () => {
    if (poll !== undefined) {
      window.clearInterval(poll);
      poll = undefined;
    }
  };

  const showQueue = () => {
    stopPolling();
    const draw = () =>
      void renderQueue(view, client, {
        onOpen: (assessmentId) => {
          stopPolling();
          void renderDetail(view, client, assessmentId, {
            reviewerId: reviewerInput.value || "reviewer",
            onDone: showQueue,
          });
        },
      });
    draw();
    poll = window.setInterval(draw, POLL_MS);
  };

  const showReport = () => {
    stopPolling();
    void renderReliability(view, client);
  };

  tokenInput.addEventListener("change", () => client.setToken(tokenInput.value || null));
  queueTab.addEventListener("click", showQueue);
  reportTab.addEventListener("click", showReport);

  clear(root);
  root.append(
    el("nav", { class: "topbar" }, [queueTab, reportTab, reviewerInput, tokenInput]),
    view,
  );
  showQueue();
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  mountApp(rootElement);
}
