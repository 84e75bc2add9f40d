/**
 * Acting on a recommendation. The controller posts feedback and nothing
 * else: card state is owned by the timeline, which only flips a card when
 * the server's feedback_ack record arrives on the stream. A per-rec_id
 * in-flight guard makes double-clicks post exactly one feedback.
 */

import type { ApiClient, ApiError } from "./client.js";
import type { FeedbackAckBody } from "./types.js";

export type ActionChoice = "execute" | "dismiss";

export interface ActionResult {
  posted: boolean;
  ack?: FeedbackAckBody;
  /** set when the server rejected the feedback; card stays proposed */
  error?: string;
}

export class FeedbackController {
  private inFlight = new Set<string>();
  private posted = new Set<string>();

  constructor(
    private readonly client: ApiClient,
    private readonly incidentId: string,
  ) {}

  async act(
    recId: string,
    choice: ActionChoice,
    actionText: string,
    ts: number,
    result = "success",
  ): Promise<ActionResult> {
    if (this.inFlight.has(recId) || this.posted.has(recId)) {
      return { posted: false };
    }
    this.inFlight.add(recId);
    try {
      const ack = await this.client.postFeedback(this.incidentId, {
        ts,
        human_action_text: actionText,
        rec_id: recId,
        disposition_hint: choice === "dismiss" ? "dismissed" : null,
        result: choice === "dismiss" ? "unknown" : result,
      });
      this.posted.add(recId);
      return { posted: true, ack };
    } catch (err) {
      // surface inline; the card stays proposed and may be retried
      return { posted: false, error: (err as ApiError).message };
    } finally {
      this.inFlight.delete(recId);
    }
  }
}
