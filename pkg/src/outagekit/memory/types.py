"""Knowledge units: long-term KCA entries and episodic outage cases."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import OrphanSlot
from ..gateway import EmbeddingVector
from ..perception.types import CriticalEvent

_SLOT_RE = re.compile(r"\{(\w+)\}")


@dataclass
class KcaKey:
    stage: str
    service_domain: str
    scope: str

    def text(self) -> str:
        return f"{self.stage} {self.service_domain} {self.scope}"

    def to_dict(self):
        return {"stage": self.stage, "service_domain": self.service_domain,
                "scope": self.scope}

    @classmethod
    def from_dict(cls, d):
        return cls(stage=d["stage"], service_domain=d["service_domain"],
                   scope=d["scope"])


@dataclass
class KcaStats:
    times_retrieved: int = 0
    times_recommended: int = 0
    times_confirmed: int = 0
    times_rejected: int = 0

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class KcaEntry:
    kca_id: str
    key: KcaKey
    condition: str
    action_template: str
    slots: list[str]
    provenance: str  # playbook | distilled | expert
    source_ref: str
    key_embedding: EmbeddingVector | None = None
    condition_embedding: EmbeddingVector | None = None
    stats: KcaStats = field(default_factory=KcaStats)
    created_at: int = 0
    updated_at: int = 0
    active: bool = True
    merged_sources: list[str] = field(default_factory=list)

    def validate_slots(self):
        referenced = set(_SLOT_RE.findall(self.action_template))
        declared = set(self.slots)
        orphans = referenced - declared
        if orphans:
            raise OrphanSlot(
                f"template slots {sorted(orphans)} missing from slots list"
            )

    def to_dict(self):
        return {
            "kca_id": self.kca_id,
            "key": self.key.to_dict(),
            "condition": self.condition,
            "action_template": self.action_template,
            "slots": list(self.slots),
            "provenance": self.provenance,
            "source_ref": self.source_ref,
            "key_embedding": list(self.key_embedding.values)
            if self.key_embedding else None,
            "condition_embedding": list(self.condition_embedding.values)
            if self.condition_embedding else None,
            "stats": self.stats.to_dict(),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "active": self.active,
            "merged_sources": list(self.merged_sources),
        }

    @classmethod
    def from_dict(cls, d, provider_id="mock"):
        def vec(values):
            if values is None:
                return None
            return EmbeddingVector(values=tuple(values), provider_id=provider_id)

        return cls(
            kca_id=d["kca_id"],
            key=KcaKey.from_dict(d["key"]),
            condition=d["condition"],
            action_template=d["action_template"],
            slots=list(d["slots"]),
            provenance=d["provenance"],
            source_ref=d["source_ref"],
            key_embedding=vec(d.get("key_embedding")),
            condition_embedding=vec(d.get("condition_embedding")),
            stats=KcaStats.from_dict(d.get("stats", {})),
            created_at=d.get("created_at", 0),
            updated_at=d.get("updated_at", 0),
            active=d.get("active", True),
            merged_sources=list(d.get("merged_sources", [])),
        )


@dataclass
class CaseAction:
    action_text: str
    ts: int
    outcome: str = "unknown"  # success | failure | unknown

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class EpisodicCase:
    case_id: str
    incident_meta: dict  # service, severity, title, duration_ms
    event_sequence: list[str]  # critical event ids
    precondition_history: list[tuple[int, str, str]]  # (ts, stage, text)
    actions: list[CaseAction]
    closed_at: int
    case_embedding: EmbeddingVector | None = None

    def precondition_text(self) -> str:
        return " ; ".join(text for _, _, text in self.precondition_history)

    def to_dict(self):
        return {
            "case_id": self.case_id,
            "incident_meta": self.incident_meta,
            "event_sequence": list(self.event_sequence),
            "precondition_history": [list(p) for p in self.precondition_history],
            "actions": [a.to_dict() for a in self.actions],
            "closed_at": self.closed_at,
            "case_embedding": list(self.case_embedding.values)
            if self.case_embedding else None,
        }

    @classmethod
    def from_dict(cls, d, provider_id="mock"):
        emb = d.get("case_embedding")
        return cls(
            case_id=d["case_id"],
            incident_meta=dict(d["incident_meta"]),
            event_sequence=list(d["event_sequence"]),
            precondition_history=[tuple(p) for p in d["precondition_history"]],
            actions=[CaseAction(**a) for a in d["actions"]],
            closed_at=d["closed_at"],
            case_embedding=EmbeddingVector(values=tuple(emb),
                                           provider_id=provider_id)
            if emb else None,
        )


@dataclass
class AttemptedAction:
    action_text: str
    ts: int
    result: str = ""

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class WorkingMemoryState:
    incident_id: str
    current_stage: str = "Detect"
    recent_events: list[CriticalEvent] = field(default_factory=list)
    attempted_actions: list[AttemptedAction] = field(default_factory=list)
    conversation_notes: list[tuple[int, str]] = field(default_factory=list)
    latest_context: object = None  # ContextState

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "current_stage": self.current_stage,
            "recent_events": [e.to_dict() for e in self.recent_events],
            "attempted_actions": [a.to_dict() for a in self.attempted_actions],
            "conversation_notes": [list(n) for n in self.conversation_notes],
            "latest_context": self.latest_context.to_dict()
            if self.latest_context else None,
        }
