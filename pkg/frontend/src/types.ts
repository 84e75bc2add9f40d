/**
 * Wire types mirroring the service JSON payloads. The console treats the
 * record stream as the source of truth; everything here is read-only data
 * as the server sent it.
 */

export type RecordKind =
  | "state"
  | "critical_event"
  | "recommendation"
  | "feedback_ack";

export interface StreamRecord {
  seq: number;
  kind: RecordKind;
  body: Record<string, unknown>;
}

export interface RecommendationBody {
  rec_id: string;
  incident_id: string;
  ts: number;
  action_text: string;
  rationale: string;
  supports: Record<string, string[]>;
  confidence: number;
  stage: string;
  refinement_rounds_used: number;
  status: string;
  precondition?: Record<string, unknown>;
  abstained: boolean;
}

export interface AbstainBody {
  incident_id: string;
  ts: number;
  reason: string;
  refinement_rounds_used: number;
  abstained: boolean;
}

export interface CriticalEventBody {
  event_id: string;
  incident_id: string;
  ts: number;
  kind: string;
  summary: string;
  phase: string;
  significance: number;
  evidence: string[];
}

export interface FeedbackAckBody {
  incident_id: string;
  ts: number;
  human_action_text: string;
  disposition: "executed_matching" | "executed_other" | "dismissed";
  result: string;
  rec_id: string | null;
  match_score: number;
}

export interface KcaStats {
  times_retrieved: number;
  times_recommended: number;
  times_confirmed: number;
  times_rejected: number;
}

export interface KcaEntry {
  kca_id: string;
  key: { stage: string; service_domain: string; scope: string };
  condition: string;
  action_template: string;
  slots: string[];
  provenance: string;
  source_ref: string;
  stats: KcaStats;
  created_at: number;
  updated_at: number;
  active: boolean;
  merged_sources: string[];
}

export interface FeedbackRequest {
  ts: number;
  human_action_text: string;
  rec_id?: string | null;
  disposition_hint?: string | null;
  result?: string;
}

export interface CoveragePoint {
  kind: "predicted" | "ground_truth" | "playbook";
  stage: string;
  text: string;
  x: number;
  y: number;
  embedding?: number[];
}

/** Per-operator session state; last_seen_seq is the resume cursor. */
export interface ConsoleSession {
  incidentId: string;
  lastSeenSeq: number;
  roleLabel: string;
  serverBaseUrl: string;
}
