import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderQueue } from "../src/queue.js";
import { fixtureFetch, makeDetail, makeState, type FixtureState } from "./fixture_server.js";

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='root'></div>";
  container = document.getElementById("root")!;
});

function clientFor(state: FixtureState): ApiClient {
  return new ApiClient("http://fixture", null, fixtureFetch(state));
}

describe("queue rendering", () => {
  it("renders exactly the pending set in generated_at order", async () => {
    const state = makeState([
      makeDetail("a2", { generatedAt: "2026-08-14T11:00:00Z" }),
      makeDetail("a1", { generatedAt: "2026-08-14T10:00:00Z" }),
      makeDetail("a3", { status: "approved" }),
    ]);
    await renderQueue(container, clientFor(state), { onOpen: () => {} });

    const rows = [...container.querySelectorAll("tr.queue-row")];
    expect(rows.map((r) => r.getAttribute("data-assessment-id"))).toEqual(["a1", "a2"]);
    expect(container.querySelector(".empty-state")).toBeNull();
    expect(rows[0]!.querySelector(".total")!.textContent).toBe("72.0");
  });

  it("shows an explicit empty state for an empty queue", async () => {
    const state = makeState([makeDetail("a1", { status: "rejected" })]);
    await renderQueue(container, clientFor(state), { onOpen: () => {} });

    expect(container.querySelector(".empty-state")).not.toBeNull();
    expect(container.querySelectorAll("tr.queue-row")).toHaveLength(0);
  });

  it("opens the detail callback for the clicked row", async () => {
    const state = makeState([makeDetail("a1")]);
    const onOpen = vi.fn();
    await renderQueue(container, clientFor(state), { onOpen });

    (container.querySelector("tr[data-assessment-id='a1'] button.open") as HTMLButtonElement).click();
    expect(onOpen).toHaveBeenCalledWith("a1");
  });

  it("keeps the queue and names the error code verbatim on failure", async () => {
    const state = makeState([makeDetail("a1")]);
    const client = clientFor(state);
    await renderQueue(container, client, { onOpen: () => {} });
    expect(container.querySelectorAll("tr.queue-row")).toHaveLength(1);

    state.failNext = { status: 502, code: "ProviderUnavailable", message: "scripted responses exhausted" };
    await renderQueue(container, client, { onOpen: () => {} });

    expect(container.querySelector(".error-banner .error-code")!.textContent).toBe("ProviderUnavailable");
    expect(container.querySelectorAll("tr.queue-row")).toHaveLength(1);
  });

  it("retry refetches and clears the banner", async () => {
    const state = makeState([makeDetail("a1")]);
    const client = clientFor(state);
    state.failNext = { status: 502, code: "RemoteCallFailed", message: "boom" };
    await renderQueue(container, client, { onOpen: () => {} });
    expect(container.querySelector(".error-banner")).not.toBeNull();

    (container.querySelector("button.retry") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(container.querySelector(".error-banner")).toBeNull();
    });
    expect(container.querySelectorAll("tr.queue-row")).toHaveLength(1);
  });
});
