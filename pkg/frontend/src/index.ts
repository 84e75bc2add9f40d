export { ApiClient, ApiError } from "./client.js";
export type { KcaPatch } from "./client.js";
export { StreamConsumer, GapError } from "./stream.js";
export type { ConnectionState, StreamConsumerOptions } from "./stream.js";
export { buildTimeline, renderTimeline, expandEvidence } from "./timeline.js";
export type { TimelineCard, CardStatus } from "./timeline.js";
export { FeedbackController } from "./feedback.js";
export type { ActionChoice, ActionResult } from "./feedback.js";
export { KcaAdmin, buildAuditView } from "./kca.js";
export type { AuditRow, AuditViewOptions, SortKey } from "./kca.js";
export { ReplayController } from "./replay.js";
export { parseCoverage, buildScatter, stagePalette } from "./scatter.js";
export type { MarkerSeries } from "./scatter.js";
export * from "./types.js";
