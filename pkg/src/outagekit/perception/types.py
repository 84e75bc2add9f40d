"""Domain objects for the signal → observation → event pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from ..util import parse_ts

MODALITIES = ("metadata", "communication", "telemetry")
SEVERITIES = ("SEV1", "SEV2", "SEV3", "SEV4", "unknown")

EVENT_KINDS = (
    "scope_expansion",
    "mitigation_start",
    "mitigation_complete",
    "dependency_recovery",
    "root_cause_identified",
    "severity_change",
    "phase_transition",
    "other",
)


@dataclass(frozen=True)
class EntityRef:
    kind: str  # service | region | component | team
    canonical_name: str
    aliases_matched: tuple[str, ...] = ()
    unresolved: bool = False

    def to_dict(self):
        return {
            "kind": self.kind,
            "canonical_name": self.canonical_name,
            "aliases_matched": list(self.aliases_matched),
            "unresolved": self.unresolved,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            canonical_name=d["canonical_name"],
            aliases_matched=tuple(d.get("aliases_matched", ())),
            unresolved=d.get("unresolved", False),
        )


@dataclass
class RawSignal:
    incident_id: str
    ts: int  # epoch ms UTC
    modality: str
    source: str
    payload: str
    attrs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d) -> "RawSignal":
        return cls(
            incident_id=d["incident_id"],
            ts=parse_ts(d["ts"]),
            modality=d["modality"],
            source=d["source"],
            payload=d["payload"],
            attrs=dict(d.get("attrs", {})),
        )

    def to_dict(self):
        return asdict(self)


@dataclass
class Tags:
    phase: str = "Detect"
    event_type: str = "status_update"
    severity: str = "unknown"
    relevance: float = 1.0

    def to_dict(self):
        return asdict(self)


@dataclass
class Observation:
    incident_id: str
    ts: int
    modality: str
    source: str
    payload: str
    attrs: dict
    dedup_key: str
    entities: list[EntityRef] = field(default_factory=list)
    tags: Tags = field(default_factory=Tags)
    dependency_context: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "ts": self.ts,
            "modality": self.modality,
            "source": self.source,
            "payload": self.payload,
            "attrs": self.attrs,
            "dedup_key": self.dedup_key,
            "entities": [e.to_dict() for e in self.entities],
            "tags": self.tags.to_dict(),
            "dependency_context": self.dependency_context,
        }


@dataclass(frozen=True)
class Duplicate:
    """Returned by normalize when the dedup key was already seen."""

    dedup_key: str


@dataclass
class ContextState:
    incident_id: str
    window_index: int
    window_start: int
    window_end: int
    phase: str = "Detect"
    severity: str = "unknown"
    open_hypotheses: list[str] = field(default_factory=list)
    mitigations_in_flight: list[str] = field(default_factory=list)
    affected_entities: set[EntityRef] = field(default_factory=set)
    summary: str = ""
    observation_refs: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "incident_id": self.incident_id,
            "window_index": self.window_index,
            "window_start": self.window_start,
            "window_end": self.window_end,
            "phase": self.phase,
            "severity": self.severity,
            "open_hypotheses": list(self.open_hypotheses),
            "mitigations_in_flight": list(self.mitigations_in_flight),
            "affected_entities": sorted(
                (e.to_dict() for e in self.affected_entities),
                key=lambda d: (d["kind"], d["canonical_name"]),
            ),
            "summary": self.summary,
            "observation_refs": list(self.observation_refs),
        }


@dataclass
class CriticalEvent:
    event_id: str
    incident_id: str
    ts: int
    kind: str
    summary: str
    delta: str
    evidence: list[str]
    phase: str
    significance: float

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in (
            "event_id", "incident_id", "ts", "kind", "summary",
            "delta", "evidence", "phase", "significance")})


@dataclass
class StateDelta:
    from_window: int
    to_window: int
    changed_fields: list[tuple[str, str, str]]
    significance: float

    def to_dict(self):
        return {
            "from_window": self.from_window,
            "to_window": self.to_window,
            "changed_fields": [list(c) for c in self.changed_fields],
            "significance": self.significance,
        }
