/**
 * KCA memory audit and editing. The audit view is a pure projection of
 * the server's entry list; edits round-trip through PATCH and the view is
 * rebuilt from a fresh list, so displayed stats are always the server's
 * numbers, never locally adjusted.
 */

import type { ApiClient } from "./client.js";
import type { KcaEntry } from "./types.js";

export type SortKey =
  | "times_confirmed"
  | "times_rejected"
  | "times_recommended"
  | "times_retrieved"
  | "updated_at";

export interface AuditRow {
  kcaId: string;
  stage: string;
  condition: string;
  actionTemplate: string;
  provenance: string;
  stats: KcaEntry["stats"];
  updatedAt: number;
  active: boolean;
  /** deactivated entries render greyed out */
  greyedOut: boolean;
}

export interface AuditViewOptions {
  sortBy?: SortKey;
  activeOnly?: boolean;
}

export function buildAuditView(
  entries: KcaEntry[],
  opts: AuditViewOptions = {},
): AuditRow[] {
  const { sortBy = "times_confirmed", activeOnly = false } = opts;
  const rows = entries
    .filter((e) => !activeOnly || e.active)
    .map((e) => ({
      kcaId: e.kca_id,
      stage: e.key.stage,
      condition: e.condition,
      actionTemplate: e.action_template,
      provenance: e.provenance,
      stats: e.stats,
      updatedAt: e.updated_at,
      active: e.active,
      greyedOut: !e.active,
    }));
  const value = (r: AuditRow) =>
    sortBy === "updated_at" ? r.updatedAt : r.stats[sortBy];
  rows.sort((a, b) => value(b) - value(a) || a.kcaId.localeCompare(b.kcaId));
  return rows;
}

export class KcaAdmin {
  constructor(private readonly client: ApiClient) {}

  list(): Promise<KcaEntry[]> {
    return this.client.listKca();
  }

  async audit(opts: AuditViewOptions = {}): Promise<AuditRow[]> {
    return buildAuditView(await this.list(), opts);
  }

  async edit(
    kcaId: string,
    fields: { condition?: string; action_template?: string; slots?: string[] },
    nowMs: number,
    actor = "console",
  ): Promise<void> {
    await this.client.patchKca({
      kca_id: kcaId,
      op: "edit",
      ...fields,
      actor,
      now_ms: nowMs,
    });
  }

  /**
   * Deactivation is destructive for retrieval, so it requires an explicit
   * confirmation callback (the UI wires a dialog here).
   */
  async deactivate(
    kcaId: string,
    confirm: () => boolean,
    nowMs: number,
    actor = "console",
  ): Promise<boolean> {
    if (!confirm()) return false;
    await this.client.patchKca({
      kca_id: kcaId,
      op: "deactivate",
      actor,
      now_ms: nowMs,
    });
    return true;
  }
}
