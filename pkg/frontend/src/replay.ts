/**
 * Replay pacing. Feeds an already-fetched record list to the view at a
 * chosen speed, honouring the original inter-record timestamps. Pause
 * halts delivery; resume continues from the same position so the feed
 * never skips or repeats a record.
 */

import type { StreamRecord } from "./types.js";

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class ReplayController {
  private position = 0;
  private paused = false;
  private speedFactor: number;
  private waiters: (() => void)[] = [];

  constructor(
    private readonly records: StreamRecord[],
    private readonly onRecord: (record: StreamRecord) => void,
    speed = 1,
    /** clamp per-record delay, keeps long quiet stretches watchable */
    private readonly maxStepMs = 1000,
  ) {
    this.speedFactor = speed;
  }

  get index(): number {
    return this.position;
  }

  get isPaused(): boolean {
    return this.paused;
  }

  setSpeed(speed: number): void {
    if (speed <= 0) throw new Error("speed must be positive");
    this.speedFactor = speed;
  }

  pause(): void {
    this.paused = true;
  }

  resume(): void {
    this.paused = false;
    for (const wake of this.waiters.splice(0)) wake();
  }

  private tsOf(record: StreamRecord): number {
    const ts = record.body.ts;
    return typeof ts === "number" ? ts : 0;
  }

  /** Run to the end of the record list. */
  async play(): Promise<void> {
    while (this.position < this.records.length) {
      if (this.paused) {
        await new Promise<void>((resolve) => this.waiters.push(resolve));
        continue;
      }
      const record = this.records[this.position]!;
      if (this.position > 0) {
        const prev = this.records[this.position - 1]!;
        const gap = Math.max(0, this.tsOf(record) - this.tsOf(prev));
        const delay = Math.min(gap / this.speedFactor, this.maxStepMs);
        if (delay > 0) await sleep(delay);
        if (this.paused) continue; // re-check after sleeping
      }
      this.position += 1;
      this.onRecord(record);
    }
  }
}
