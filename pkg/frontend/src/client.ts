/**
 * Thin HTTP client over the service API. All console mutations go through
 * these calls; there are no side channels.
 */

import type {
  FeedbackAckBody,
  FeedbackRequest,
  KcaEntry,
  StreamRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface KcaPatch {
  kca_id: string;
  op?: "edit" | "deactivate";
  condition?: string;
  action_template?: string;
  slots?: string[];
  key?: { stage: string; service_domain: string; scope: string };
  actor?: string;
  now_ms?: number;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) h.authorization = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let code = "http_error";
      let message = `${method} ${path} -> ${res.status}`;
      try {
        const payload = (await res.json()) as { code?: string; message?: string };
        if (payload.code) code = payload.code;
        if (payload.message) message = payload.message;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(res.status, code, message);
    }
    return (await res.json()) as T;
  }

  async records(incidentId: string, fromSeq = 0): Promise<StreamRecord[]> {
    const out = await this.request<{ records: StreamRecord[] }>(
      "GET",
      `/incidents/${incidentId}/records?from_seq=${fromSeq}`,
    );
    return out.records;
  }

  /**
   * Open the NDJSON stream and return an async iterator of records.
   * The caller owns cursor bookkeeping; this just parses lines.
   */
  async *stream(
    incidentId: string,
    fromSeq = 0,
    tailMs = 0,
  ): AsyncGenerator<StreamRecord> {
    const res = await fetch(
      `${this.baseUrl}/incidents/${incidentId}/stream?from_seq=${fromSeq}&tail_ms=${tailMs}`,
      { headers: this.headers() },
    );
    if (!res.ok || !res.body) {
      throw new ApiError(res.status, "stream_error", `stream -> ${res.status}`);
    }
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (value) buffer += decoder.decode(value, { stream: true });
      let nl: number;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (line) yield JSON.parse(line) as StreamRecord;
      }
      if (done) return;
    }
  }

  postFeedback(
    incidentId: string,
    feedback: FeedbackRequest,
  ): Promise<FeedbackAckBody> {
    return this.request("POST", `/incidents/${incidentId}/feedback`, feedback);
  }

  async listKca(): Promise<KcaEntry[]> {
    const out = await this.request<{ entries: KcaEntry[] }>(
      "GET",
      "/memory/kca",
    );
    return out.entries;
  }

  patchKca(patch: KcaPatch): Promise<{ kca_id: string }> {
    return this.request("PATCH", "/memory/kca", patch);
  }
}
