import { describe, expect, it } from "vitest";

import {
  effectiveInterval,
  formatMetric,
  percentInBand,
  scoreProblem,
  weightedTotalPreview,
  type CriterionScore,
} from "../src/model.js";
import { makeDetail, makeRubric } from "./fixture_server.js";

const rubric = makeRubric();
const design = rubric.criteria.find((c) => c.id === "design_approach")!;

function profileScores(): CriterionScore[] {
  return makeDetail("a1").assessment.criterion_scores;
}

describe("band intervals", () => {
  it("treats bands as half-open except the top one", () => {
    expect(effectiveInterval(design, "Good")).toEqual([65, 80, false]);
    expect(effectiveInterval(design, "Excellent")).toEqual([80, 100, true]);
    expect(percentInBand(design, "Good", 79.5)).toBe(true);
    expect(percentInBand(design, "Good", 80)).toBe(false);
    expect(percentInBand(design, "Excellent", 100)).toBe(true);
    expect(percentInBand(design, "NeedsImprovement", 0)).toBe(true);
  });

  it("flags a percent outside the chosen band", () => {
    expect(scoreProblem(design, "Satisfactory", 85)).toMatch(/outside Satisfactory/);
    expect(scoreProblem(design, "Satisfactory", 55)).toBeNull();
    expect(scoreProblem(design, "Good", 120)).toMatch(/between 0 and 100/);
    expect(scoreProblem(design, "Good", Number.NaN)).toMatch(/between 0 and 100/);
  });
});

describe("weighted total preview", () => {
  it("reproduces the service weighting for the standard profile", () => {
    expect(weightedTotalPreview(rubric, profileScores())).toBe(72.0);
  });

  it("moves with a single percent edit", () => {
    const scores = profileScores();
    scores.find((s) => s.criterion_id === "design_approach")!.percent = 78;
    expect(weightedTotalPreview(rubric, scores)).toBeCloseTo(72.75, 10);
  });

  it("requires a score for every criterion", () => {
    expect(() => weightedTotalPreview(rubric, profileScores().slice(1))).toThrow(/missing score/);
  });
});

describe("metric formatting", () => {
  it("renders absent metrics as not available, never zero", () => {
    expect(formatMetric(null)).toBe("not available");
    expect(formatMetric(undefined)).toBe("not available");
    expect(formatMetric(0)).toBe("0.00");
    expect(formatMetric(-1.8)).toBe("-1.80");
    expect(formatMetric(0.6324, 4)).toBe("0.6324");
  });
});
