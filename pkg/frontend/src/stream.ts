/**
 * Resumable stream consumer. Keeps a monotone last-seen-seq cursor,
 * reconnects from it after connection loss, and guarantees the record
 * callback sees each seq exactly once, in order, with no gaps.
 */

import type { ApiClient } from "./client.js";
import type { StreamRecord } from "./types.js";

export type ConnectionState = "connected" | "reconnecting" | "stopped";

export interface StreamConsumerOptions {
  tailMs?: number;
  /** Delay before a reconnect attempt, ms. Small in tests. */
  reconnectDelayMs?: number;
  /** Fall back to /records polling after this many failed stream opens. */
  pollAfterFailures?: number;
  pollIntervalMs?: number;
  onStateChange?: (state: ConnectionState) => void;
}

export class GapError extends Error {
  constructor(expected: number, got: number) {
    super(`sequence gap: expected ${expected}, got ${got}`);
    this.name = "GapError";
  }
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class StreamConsumer {
  private cursor: number;
  private running = false;
  private loop: Promise<void> | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly incidentId: string,
    private readonly onRecord: (record: StreamRecord) => void,
    private readonly opts: StreamConsumerOptions = {},
    fromSeq = 0,
  ) {
    this.cursor = fromSeq;
  }

  get lastSeenSeq(): number {
    return this.cursor;
  }

  /** Deliver a record if it advances the cursor; drop stale duplicates. */
  private deliver(record: StreamRecord): void {
    if (record.seq <= this.cursor) return;
    if (record.seq !== this.cursor + 1) {
      throw new GapError(this.cursor + 1, record.seq);
    }
    this.cursor = record.seq;
    this.onRecord(record);
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.loop = this.run();
  }

  /** Stop consuming. Restarting later resumes from lastSeenSeq. */
  async stop(): Promise<void> {
    this.running = false;
    this.opts.onStateChange?.("stopped");
    await this.loop;
    this.loop = null;
  }

  /** Resolves once the loop exits (stopped, or tail window elapsed). */
  async drain(): Promise<void> {
    await this.loop;
  }

  private async run(): Promise<void> {
    const {
      tailMs = 0,
      reconnectDelayMs = 50,
      pollAfterFailures = 3,
      pollIntervalMs = 100,
      onStateChange,
    } = this.opts;
    let failures = 0;
    while (this.running) {
      try {
        onStateChange?.("connected");
        for await (const record of this.client.stream(
          this.incidentId,
          this.cursor,
          tailMs,
        )) {
          this.deliver(record);
          failures = 0;
          if (!this.running) return;
        }
        // clean end of stream: the tail window elapsed server-side
        if (tailMs <= 0) {
          this.running = false;
          return;
        }
      } catch (err) {
        if (err instanceof GapError) throw err;
        failures += 1;
        if (!this.running) return;
        onStateChange?.("reconnecting");
        if (failures >= pollAfterFailures) {
          await this.pollOnce();
          await sleep(pollIntervalMs);
          continue;
        }
        await sleep(reconnectDelayMs);
      }
    }
  }

  /** Polling fallback: one /records page from the cursor. */
  private async pollOnce(): Promise<void> {
    try {
      const records = await this.client.records(this.incidentId, this.cursor);
      for (const record of records) this.deliver(record);
    } catch {
      // server still unreachable; the loop retries
    }
  }
}
