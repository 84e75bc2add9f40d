import { describe, expect, it } from "vitest";
import { buildScatter, parseCoverage, stagePalette } from "../src/scatter.js";

const FIXTURE = [
  { kind: "predicted", stage: "Mitigate", text: "fail over", x: 0.1, y: -0.2 },
  { kind: "ground_truth", stage: "Mitigate", text: "failover db", x: 0.12, y: -0.18 },
  { kind: "playbook", stage: "Resolve", text: "power up racks", x: -0.5, y: 0.3 },
  { kind: "predicted", stage: "Resolve", text: "staged recovery", x: -0.48, y: 0.28 },
]
  .map((row) => JSON.stringify(row))
  .join("\n");

describe("coverage scatter", () => {
  it("parses the NDJSON export, skipping blank lines", () => {
    const points = parseCoverage(FIXTURE + "\n\n");
    expect(points).toHaveLength(4);
    expect(points[0]!.kind).toBe("predicted");
  });

  it("renders three marker kinds", () => {
    const series = buildScatter(parseCoverage(FIXTURE));
    expect(series.map((s) => s.kind)).toEqual([
      "predicted",
      "ground_truth",
      "playbook",
    ]);
    expect(new Set(series.map((s) => s.marker)).size).toBe(3);
    expect(series[0]!.points).toHaveLength(2);
  });

  it("keeps kind order stable regardless of file order", () => {
    const reversed = FIXTURE.split("\n").reverse().join("\n");
    const a = buildScatter(parseCoverage(FIXTURE)).map((s) => s.kind);
    const b = buildScatter(parseCoverage(reversed)).map((s) => s.kind);
    expect(a).toEqual(b);
  });

  it("assigns stage colours deterministically", () => {
    const points = parseCoverage(FIXTURE);
    const palette = stagePalette(points);
    expect(palette).toEqual(stagePalette([...points].reverse()));
    expect(palette.size).toBe(2);
  });
});
