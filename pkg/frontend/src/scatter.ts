/**
 * Action-space coverage scatter. Parses the evaluator's NDJSON coverage
 * export and groups points into marker series by kind (predicted /
 * ground_truth / playbook) with per-stage colour assignment.
 */

import type { CoveragePoint } from "./types.js";

export interface MarkerSeries {
  kind: CoveragePoint["kind"];
  /** marker glyph per kind so the three populations are distinguishable */
  marker: "circle" | "triangle" | "square";
  points: { x: number; y: number; stage: string; text: string }[];
}

const MARKERS: Record<CoveragePoint["kind"], MarkerSeries["marker"]> = {
  predicted: "circle",
  ground_truth: "triangle",
  playbook: "square",
};

export function parseCoverage(ndjson: string): CoveragePoint[] {
  return ndjson
    .split("\n")
    .map((line) => line.trim())
    .filter(Boolean)
    .map((line) => JSON.parse(line) as CoveragePoint);
}

export function buildScatter(points: CoveragePoint[]): MarkerSeries[] {
  const series = new Map<CoveragePoint["kind"], MarkerSeries>();
  for (const p of points) {
    let s = series.get(p.kind);
    if (!s) {
      s = { kind: p.kind, marker: MARKERS[p.kind], points: [] };
      series.set(p.kind, s);
    }
    s.points.push({ x: p.x, y: p.y, stage: p.stage, text: p.text });
  }
  // stable kind order regardless of file order
  const order: CoveragePoint["kind"][] = [
    "predicted",
    "ground_truth",
    "playbook",
  ];
  return order.filter((k) => series.has(k)).map((k) => series.get(k)!);
}

/** Stage → colour name, deterministic across renders. */
export function stagePalette(points: CoveragePoint[]): Map<string, string> {
  const colours = ["blue", "orange", "green", "red", "purple", "brown"];
  const stages = [...new Set(points.map((p) => p.stage))].sort();
  return new Map(stages.map((s, i) => [s, colours[i % colours.length]!]));
}
