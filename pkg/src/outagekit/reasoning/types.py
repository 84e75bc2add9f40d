"""Decision-core types: preconditions, recommendations, feedback."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..memory.types import EpisodicCase, KcaEntry, WorkingMemoryState


@dataclass
class Precondition:
    incident_id: str
    ts: int
    text: str
    meta: dict  # stage, affected_service, severity, outage_title
    supporting_events: list[str]

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "ts": self.ts,
            "text": self.text,
            "meta": dict(self.meta),
            "supporting_events": list(self.supporting_events),
        }


@dataclass
class RetrievalBundle:
    kca_hits: list[tuple[KcaEntry, float]]
    episodic_hits: list[tuple[EpisodicCase, float]]
    working: WorkingMemoryState


@dataclass
class Recommendation:
    rec_id: str
    incident_id: str
    ts: int
    action_text: str
    rationale: str
    supports: dict  # {"kca_ids": [...], "case_ids": [...]}
    confidence: float
    stage: str
    refinement_rounds_used: int
    status: str = "proposed"  # proposed | executed | dismissed | expired

    def to_dict(self):
        return {
            "rec_id": self.rec_id,
            "incident_id": self.incident_id,
            "ts": self.ts,
            "action_text": self.action_text,
            "rationale": self.rationale,
            "supports": {k: list(v) for k, v in self.supports.items()},
            "confidence": self.confidence,
            "stage": self.stage,
            "refinement_rounds_used": self.refinement_rounds_used,
            "status": self.status,
        }


@dataclass
class Abstain:
    incident_id: str
    ts: int
    reason: str
    refinement_rounds_used: int
    stage: str = ""

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "ts": self.ts,
            "reason": self.reason,
            "refinement_rounds_used": self.refinement_rounds_used,
            "stage": self.stage,
        }


@dataclass
class FeedbackRecord:
    incident_id: str
    ts: int
    human_action_text: str
    disposition: str = "executed_other"  # executed_matching | executed_other | dismissed
    result: str = "unknown"  # success | failure | unknown
    rec_id: str | None = None
    match_score: float = 0.0

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "ts": self.ts,
            "human_action_text": self.human_action_text,
            "disposition": self.disposition,
            "result": self.result,
            "rec_id": self.rec_id,
            "match_score": self.match_score,
        }
