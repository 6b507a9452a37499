import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderReliability } from "../src/reliability.js";
import { fixtureFetch, makeReliability, makeState, type FixtureState } from "./fixture_server.js";

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='root'></div>";
  container = document.getElementById("root")!;
});

function clientFor(state: FixtureState): ApiClient {
  return new ApiClient("http://fixture", null, fixtureFetch(state));
}

function metric(key: string): string {
  return container.querySelector(`td[data-metric='${key}']`)!.textContent!;
}

describe("reliability view", () => {
  it("draws the mean and limit lines at exactly the reported values", async () => {
    const state = makeState([], makeReliability());
    await renderReliability(container, clientFor(state));

    const mean = container.querySelector("svg.bland-altman .mean-line")!;
    const lower = container.querySelector("svg.bland-altman .loa-lower")!;
    const upper = container.querySelector("svg.bland-altman .loa-upper")!;
    expect(mean.getAttribute("data-value")).toBe("-1.8");
    expect(lower.getAttribute("data-value")).toBe("-8.2");
    expect(upper.getAttribute("data-value")).toBe("4.6");

    // Horizontal lines, stacked upper above mean above lower (SVG y grows downward).
    for (const line of [mean, lower, upper]) {
      expect(line.getAttribute("y1")).toBe(line.getAttribute("y2"));
    }
    const y = (line: Element) => Number(line.getAttribute("y1"));
    expect(y(upper)).toBeLessThan(y(mean));
    expect(y(mean)).toBeLessThan(y(lower));
  });

  it("shows every metric and renders absent ones as not available", async () => {
    const state = makeState([], makeReliability({ kappa: null, pearson_r: null }));
    await renderReliability(container, clientFor(state));

    expect(metric("kappa")).toBe("not available");
    expect(metric("pearson_r")).toBe("not available");
    expect(metric("icc_2_1")).toBe("0.7000");
    expect(metric("mae")).toBe("2.40");
    expect(metric("mean_diff")).toBe("-1.80");
    expect(metric("loa_lower")).toBe("-8.20");
    expect(metric("loa_upper")).toBe("4.60");
    expect(metric("n")).toBe("3");
    expect(metric("unmatched")).toBe("0");
  });

  it("plots one scatter mark per pair plus the identity line", async () => {
    const pairs = Array.from({ length: 150 }, (_, i) => ({
      id: `sub-${i}`,
      human: (i * 13) % 101,
      machine: (i * 29) % 101,
    }));
    const state = makeState([], makeReliability({ n: 150, pairs }));
    await renderReliability(container, clientFor(state));

    expect(container.querySelectorAll("svg.scatter circle.scatter-point")).toHaveLength(150);
    expect(container.querySelector("svg.scatter .identity-line")).not.toBeNull();
    expect(container.querySelectorAll("svg.bland-altman circle.ba-point")).toHaveLength(150);
  });

  it("surfaces report errors with the code named", async () => {
    const state = makeState([]);
    state.failNext = { status: 400, code: "InsufficientData", message: "needs at least 2 pairs" };
    await renderReliability(container, clientFor(state));

    expect(container.querySelector(".error-banner .error-code")!.textContent).toBe("InsufficientData");
  });
});
