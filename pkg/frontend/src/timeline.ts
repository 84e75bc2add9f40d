/**
 * Timeline view model. Building and rendering are pure functions of the
 * record sequence: the same records always produce the same cards in the
 * same order. Recommendation cards are ack-gated — their status only
 * changes when a feedback_ack record arrives on the stream, never from a
 * client-side guess.
 */

import type {
  CriticalEventBody,
  FeedbackAckBody,
  RecommendationBody,
  StreamRecord,
} from "./types.js";

export type CardStatus = "proposed" | "executed" | "dismissed" | "expired";

export interface TimelineCard {
  seq: number;
  kind: StreamRecord["kind"];
  ts: number;
  title: string;
  stageBadge: string;
  severityBadge: string;
  /** recommendation cards only */
  recId?: string;
  status?: CardStatus;
  confidence?: number;
  /** expandable source observations / supports */
  evidence: string[];
}

function recommendationCard(seq: number, body: RecommendationBody): TimelineCard {
  const supports = Object.entries(body.supports ?? {}).flatMap(([k, ids]) =>
    ids.map((id) => `${k}:${id}`),
  );
  return {
    seq,
    kind: "recommendation",
    ts: body.ts,
    title: body.action_text,
    stageBadge: body.stage,
    severityBadge: "",
    recId: body.rec_id,
    status: "proposed",
    confidence: body.confidence,
    evidence: supports,
  };
}

function eventCard(seq: number, body: CriticalEventBody): TimelineCard {
  return {
    seq,
    kind: "critical_event",
    ts: body.ts,
    title: body.summary,
    stageBadge: body.phase,
    severityBadge: "",
    evidence: [...(body.evidence ?? [])],
  };
}

function ackCard(seq: number, body: FeedbackAckBody): TimelineCard {
  return {
    seq,
    kind: "feedback_ack",
    ts: body.ts,
    title: body.human_action_text,
    stageBadge: body.disposition,
    severityBadge: "",
    recId: body.rec_id ?? undefined,
    evidence: [],
  };
}

function stateCard(seq: number, body: Record<string, unknown>): TimelineCard {
  return {
    seq,
    kind: "state",
    ts: (body.window_end as number) ?? 0,
    title: (body.summary as string) ?? "",
    stageBadge: (body.phase as string) ?? "",
    severityBadge: (body.severity as string) ?? "",
    evidence: [],
  };
}

/**
 * Fold a record sequence into ordered feed cards. Records are sorted by
 * seq and deduplicated defensively (the stream consumer already prevents
 * duplicates; a polling client may hand us overlap).
 */
export function buildTimeline(records: StreamRecord[]): TimelineCard[] {
  const bySeq = new Map<number, StreamRecord>();
  for (const r of records) if (!bySeq.has(r.seq)) bySeq.set(r.seq, r);
  const ordered = [...bySeq.values()].sort((a, b) => a.seq - b.seq);

  const cards: TimelineCard[] = [];
  const recCards = new Map<string, TimelineCard>();
  for (const record of ordered) {
    switch (record.kind) {
      case "recommendation": {
        const body = record.body as unknown as RecommendationBody;
        if (body.abstained || !body.rec_id) break; // abstentions are not cards
        const card = recommendationCard(record.seq, body);
        recCards.set(body.rec_id, card);
        cards.push(card);
        break;
      }
      case "critical_event":
        cards.push(eventCard(record.seq, record.body as unknown as CriticalEventBody));
        break;
      case "feedback_ack": {
        const body = record.body as unknown as FeedbackAckBody;
        cards.push(ackCard(record.seq, body));
        // the ack is the only thing allowed to flip a recommendation card
        if (body.rec_id) {
          const rec = recCards.get(body.rec_id);
          if (rec) {
            rec.status =
              body.disposition === "dismissed" ? "dismissed" : "executed";
          }
        }
        break;
      }
      case "state":
        cards.push(stateCard(record.seq, record.body));
        break;
    }
  }
  return cards;
}

/** Render cards to display lines; pure, one line per card, seq order. */
export function renderTimeline(cards: TimelineCard[]): string[] {
  return cards.map((c) => {
    const badges = [c.stageBadge, c.severityBadge].filter(Boolean).join(" ");
    const status = c.status ? ` <${c.status}>` : "";
    const conf =
      c.confidence !== undefined ? ` (${c.confidence.toFixed(2)})` : "";
    return `#${c.seq} [${c.kind}] ${badges} ${c.title}${conf}${status}`.trimEnd();
  });
}

/** Expand one card's evidence for the detail pane. */
export function expandEvidence(card: TimelineCard): string[] {
  return [...card.evidence];
}
