/** Agreement report view: metric table, human-vs-machine scatter, and a
 * Bland-Altman plot with the mean-difference and limit lines at the values
 * the API reported.
 */

import { ApiError, type ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { formatMetric, type ReliabilityPayload, type ScorePair } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 400;
const MARGIN = 32;

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function scaleLinear(domainLo: number, domainHi: number, rangeLo: number, rangeHi: number) {
  const span = domainHi - domainLo || 1;
  return (v: number) => rangeLo + ((v - domainLo) / span) * (rangeHi - rangeLo);
}

function metricsTable(report: ReliabilityPayload): HTMLElement {
  const ba = report.bland_altman;
  const entries: [string, string, string][] = [
    ["n", "pairs", String(report.n)],
    ["kappa", "Cohen's kappa (bands)", formatMetric(report.kappa, 4)],
    ["icc_2_1", "ICC(2,1)", formatMetric(report.icc_2_1, 4)],
    ["pearson_r", "Pearson r", formatMetric(report.pearson_r, 4)],
    ["mae", "MAE", formatMetric(report.mae)],
    ["rmse", "RMSE", formatMetric(report.rmse)],
    ["approval_rate", "approval rate", formatMetric(report.approval_rate, 4)],
    ["mean_diff", "mean difference", formatMetric(ba ? ba.mean_diff : null)],
    ["sd_diff", "sd of differences", formatMetric(ba ? ba.sd_diff : null)],
    ["loa_lower", "lower limit of agreement", formatMetric(ba ? ba.loa_lower : null)],
    ["loa_upper", "upper limit of agreement", formatMetric(ba ? ba.loa_upper : null)],
    ["unmatched", "unmatched uploads", String(report.unmatched)],
  ];
  return el(
    "table",
    { class: "metrics" },
    entries.map(([key, name, value]) =>
      el("tr", {}, [el("th", {}, [name]), el("td", { class: "metric", "data-metric": key }, [value])]),
    ),
  );
}

function scatterPlot(pairs: ScorePair[]): SVGElement {
  const svg = svgEl("svg", {
    class: "scatter",
    width: String(SIZE),
    height: String(SIZE),
    viewBox: `0 0 ${SIZE} ${SIZE}`,
  });
  const x = scaleLinear(0, 100, MARGIN, SIZE - MARGIN);
  const y = scaleLinear(0, 100, SIZE - MARGIN, MARGIN);
  svg.append(
    svgEl("line", {
      class: "identity-line",
      x1: String(x(0)),
      y1: String(y(0)),
      x2: String(x(100)),
      y2: String(y(100)),
    }),
  );
  for (const pair of pairs) {
    svg.append(
      svgEl("circle", {
        class: "scatter-point",
        "data-id": pair.id,
        cx: String(x(pair.human)),
        cy: String(y(pair.machine)),
        r: "3",
      }),
    );
  }
  return svg;
}

function blandAltmanPlot(report: ReliabilityPayload): SVGElement | null {
  const ba = report.bland_altman;
  if (ba === null) {
    return null;
  }
  const diffs = report.pairs.map((p) => p.machine - p.human);
  const lo = Math.min(ba.loa_lower, ...diffs) - 1;
  const hi = Math.max(ba.loa_upper, ...diffs) + 1;
  const svg = svgEl("svg", {
    class: "bland-altman",
    width: String(SIZE),
    height: String(SIZE),
    viewBox: `0 0 ${SIZE} ${SIZE}`,
  });
  const x = scaleLinear(0, 100, MARGIN, SIZE - MARGIN);
  const y = scaleLinear(lo, hi, SIZE - MARGIN, MARGIN);
  const lines: [string, number][] = [
    ["mean-line", ba.mean_diff],
    ["loa-line loa-lower", ba.loa_lower],
    ["loa-line loa-upper", ba.loa_upper],
  ];
  for (const [cls, value] of lines) {
    svg.append(
      svgEl("line", {
        class: cls,
        "data-value": String(value),
        x1: String(MARGIN),
        x2: String(SIZE - MARGIN),
        y1: String(y(value)),
        y2: String(y(value)),
      }),
    );
  }
  for (const pair of report.pairs) {
    svg.append(
      svgEl("circle", {
        class: "ba-point",
        "data-id": pair.id,
        cx: String(x((pair.human + pair.machine) / 2)),
        cy: String(y(pair.machine - pair.human)),
        r: "3",
      }),
    );
  }
  return svg;
}

export async function renderReliability(
  container: HTMLElement,
  client: ApiClient,
  cohort?: string,
): Promise<void> {
  let report: ReliabilityPayload;
  try {
    report = await client.reliability(cohort);
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
  container.append(el("h2", {}, ["Human vs machine agreement"]));
  container.append(metricsTable(report));
  container.append(
    el("section", { class: "plots" }, [
      el("figure", {}, [scatterPlot(report.pairs), el("figcaption", {}, ["Human (x) vs machine (y)"])]),
    ]),
  );
  const ba = blandAltmanPlot(report);
  if (ba !== null) {
    const figure = el("figure", {}, [ba, el("figcaption", {}, ["Difference vs mean per pair"])]);
    container.querySelector(".plots")?.append(figure);
  }
}
