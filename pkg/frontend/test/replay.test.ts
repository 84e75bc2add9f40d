import { describe, expect, it } from "vitest";
import { ReplayController } from "../src/replay.js";
import type { StreamRecord } from "../src/types.js";

function makeRecords(n: number, gapMs: number): StreamRecord[] {
  return Array.from({ length: n }, (_, i) => ({
    seq: i + 1,
    kind: "critical_event" as const,
    body: { ts: 1_000_000 + i * gapMs, summary: `ev ${i}` },
  }));
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

describe("ReplayController", () => {
  it("delivers every record exactly once, in order", async () => {
    const records = makeRecords(10, 1);
    const seen: number[] = [];
    const controller = new ReplayController(records, (r) => seen.push(r.seq), 100);
    await controller.play();
    expect(seen).toEqual(records.map((r) => r.seq));
  });

  it("pause halts feed growth and resume continues without gaps", async () => {
    const records = makeRecords(20, 10);
    const seen: number[] = [];
    const controller = new ReplayController(records, (r) => seen.push(r.seq), 1);
    const run = controller.play();

    await sleep(35);
    controller.pause();
    await sleep(5); // let any in-flight step settle
    const frozenAt = seen.length;
    expect(frozenAt).toBeGreaterThan(0);
    expect(frozenAt).toBeLessThan(20);
    await sleep(50);
    expect(seen.length).toBe(frozenAt); // no growth while paused

    controller.resume();
    await run;
    expect(seen).toEqual(records.map((r) => r.seq)); // no gaps, no repeats
  });

  it("10x speed finishes in no more than a fifth of the 1x wall time", async () => {
    const records = makeRecords(25, 20); // 480ms of virtual time

    const t1Start = performance.now();
    await new ReplayController(records, () => {}, 1).play();
    const t1 = performance.now() - t1Start;

    const t10Start = performance.now();
    await new ReplayController(records, () => {}, 10).play();
    const t10 = performance.now() - t10Start;

    expect(t10).toBeLessThanOrEqual(t1 / 5);
  });

  it("rejects a non-positive speed", () => {
    const controller = new ReplayController([], () => {});
    expect(() => controller.setSpeed(0)).toThrow();
  });
});
