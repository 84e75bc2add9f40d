"""Synthetic outage trace corpus.

Stand-in for proprietary incident data: scripted scenario templates
(thermal shutdown, database failover, capacity exhaustion, dependency
cascade, staged drill) instantiated with seeded noise chatter and
duplicate signals. The generator knows which utterances are operator
actions, so every trace ships its own ground-truth annotations.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from ..errors import UnknownProfile
from ..perception import RawSignal, Topology
from ..util import parse_ts

BASE_TS = parse_ts("2025-06-01T04:00:00Z")
_DAY_MS = 24 * 3600 * 1000
_MIN_MS = 60 * 1000

DEFAULT_TOPOLOGY_YAML = """\
entities:
  - {kind: service, canonical_name: DirectDrive, aliases: [dd-cluster, direct drive, direct-drive, direct drive cluster]}
  - {kind: service, canonical_name: BlobStore, aliases: [blob store, blob-store]}
  - {kind: service, canonical_name: OrderDB, aliases: [order db, order database, orders database]}
  - {kind: service, canonical_name: CheckoutAPI, aliases: [checkout api, checkout-api]}
  - {kind: service, canonical_name: CacheTier, aliases: [cache tier, cache-tier]}
  - {kind: component, canonical_name: StorageLayer, aliases: [storage layer, storage backend]}
  - {kind: component, canonical_name: CoolingSystem, aliases: [cooling system, chiller plant]}
  - {kind: component, canonical_name: LoadBalancer, aliases: [load balancer, lb fleet]}
  - {kind: region, canonical_name: east-region, aliases: [east region, region east]}
  - {kind: region, canonical_name: west-region, aliases: [west region, region west]}
  - {kind: team, canonical_name: StorageOps, aliases: [storage ops, storage oncall]}
edges:
  - {from: DirectDrive, to: StorageLayer}
  - {from: BlobStore, to: StorageLayer}
  - {from: StorageLayer, to: CoolingSystem}
  - {from: CheckoutAPI, to: OrderDB}
  - {from: CheckoutAPI, to: CacheTier}
  - {from: OrderDB, to: StorageLayer}
  - {from: CacheTier, to: LoadBalancer}
"""


def default_topology() -> Topology:
    import yaml

    data = yaml.safe_load(DEFAULT_TOPOLOGY_YAML)
    entities = {
        e["canonical_name"]: (e["kind"], list(e.get("aliases", [])))
        for e in data["entities"]
    }
    edges = [(e["from"], e["to"]) for e in data["edges"]]
    return Topology(entities=entities, edges=edges)


# ---------------------------------------------------------------------------
# bundled playbooks

PLAYBOOKS: dict[str, dict] = {
    "thermal-recovery-runbook": {
        "title": "Drive Core Platform Recovery Sequence",
        "service": "DirectDrive",
        "body": """\
# Drive Core Platform Recovery Sequence

## Resolve stage: recovery after thermal shutdowns
When cooling is restored and temperatures are stabilizing after thermal protection shutdowns:
- Verify environmental stability before initiating the drive core platform recovery
- Initiate controlled, staged recovery sequence
- Validate storage dependency health before returning traffic
""",
    },
    "db-failover-runbook": {
        "title": "Database Failover Procedure",
        "service": "OrderDB",
        "body": """\
# Database Failover Procedure

## Mitigate stage: primary database failure
If the primary database is unreachable and automated failover did not trigger:
- Execute manual failover: promote a healthy replica of {service} to primary
- Validate replication lag before redirecting writes to the new primary

## Resolve stage: after failover completes
When failover is complete and error rates are recovering:
- Restore traffic gradually and confirm dependency health
""",
    },
    "capacity-runbook": {
        "title": "Storage Capacity Exhaustion Response",
        "service": "BlobStore",
        "body": """\
# Storage Capacity Exhaustion Response

## Mitigate stage: capacity exhaustion
If disk capacity is exhausted and ingest keeps growing:
- Throttle ingest and drain writes on {service}

## Resolve stage: capacity recovered
When capacity pressure is relieved after throttling:
- Provision additional storage capacity in the affected region
""",
    },
    "cascade-runbook": {
        "title": "Dependency Cascade Containment",
        "service": "CacheTier",
        "body": """\
# Dependency Cascade Containment

## Mitigate stage: bad configuration cascade
If a bad load balancer configuration change is confirmed:
- Roll back the last load balancer configuration change

## Resolve stage: downstream recovery
When the rollback is complete and dependency health is verified:
- Redirect traffic and validate dependency health for {service}
""",
    },
    "staged-drill-runbook": {
        "title": "Elevated Error Triage Drill",
        "service": "CheckoutAPI",
        "body": """\
# Elevated Error Triage Drill

## Investigate stage: open hypothesis
If a hypothesis is open for cache tier errors while investigating:
- Execute triage checklist for {service}

## Mitigate stage: node restarts
If cache misses spike and node restarts are needed during mitigation:
- Restart {service} nodes in a rolling fashion

## Resolve stage: recovery confirmation
When error rates are recovering and nodes are healthy again:
- Restore traffic and confirm recovery health
""",
    },
}


# ---------------------------------------------------------------------------
# scenario scripts
#
# Beat = (minute, modality, source, payload, attrs)
# Annotation = (minute, label_text, stage, quote_minute) where quote_minute
# points at the signal carrying the utterance.

@dataclass
class Annotation:
    ts: int
    action_text: str
    stage: str
    source_quote: str
    result: str = "success"

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class Trace:
    trace_id: str
    incident_meta: dict
    signals: list[RawSignal]
    annotations: list[Annotation] = field(default_factory=list)
    label_file_ref: str | None = None


def _beats_thermal():
    beats = [
        (1, "telemetry", "alert",
         "Thermal protection alert triggered shutdowns across storage layer and dd-cluster",
         {"severity": "SEV-1"}),
        (6, "communication", "chat",
         "Assessing impact: checkout api customers affected in east region", {}),
        (11, "communication", "bridge_transcript",
         "Investigating root cause, hypothesis: cooling system failure caused the shutdowns",
         {}),
        (13, "communication", "bridge_transcript",
         "Mitigation started: cooling system restart initiated", {}),
        (17, "communication", "bridge_transcript",
         "Cooling system restart complete, temperatures stabilizing, cooling back to normal under SEV-1",
         {}),
        (22, "communication", "chat",
         "Controlled, staged recovery initiated", {}),
    ]
    annotations = [
        (13, "Cooling system restart initiated", "Mitigate"),
        (22, "Controlled, staged recovery initiated", "Resolve"),
    ]
    return beats, annotations, {"title": "High Thermal Triggered Shutdowns",
                                "service": "DirectDrive", "severity": "SEV1"}


def _beats_thermal_paraphrase():
    beats = [
        (1, "telemetry", "alert",
         "Thermal safeguard alert triggered shutdowns of dd-cluster and the storage backend",
         {"severity": "SEV-1"}),
        (6, "communication", "chat",
         "Assessing impact: customers affected on checkout api across east region", {}),
        (11, "communication", "bridge_transcript",
         "Investigating root cause, hypothesis: chiller plant fault caused the shutdowns",
         {}),
        (13, "communication", "bridge_transcript",
         "Mitigation started: cooling system restart initiated by storage ops", {}),
        (17, "communication", "bridge_transcript",
         "Cooling system restart complete, temperatures stabilizing, cooling back to normal under SEV-1",
         {}),
        (22, "communication", "chat",
         "Controlled, staged recovery initiated", {}),
    ]
    annotations = [
        (13, "Cooling system restart initiated", "Mitigate"),
        (22, "Controlled, staged recovery initiated", "Resolve"),
    ]
    return beats, annotations, {"title": "Thermal Shutdowns Recurrence",
                                "service": "DirectDrive", "severity": "SEV1"}


def _beats_db_failover():
    beats = [
        (1, "telemetry", "alert",
         "Alert triggered: primary order database not responding to health checks",
         {"severity": "SEV-2", "service": "OrderDB"}),
        (6, "communication", "chat",
         "Assessing impact: checkout api error rate rising, customers affected", {}),
        (11, "communication", "bridge_transcript",
         "Read replicas report no primary order database connection, investigating root cause",
         {}),
        (13, "communication", "bridge_transcript",
         "Mitigation started: manual failover underway for order database", {}),
        (14, "communication", "chat",
         "Manual failover executed: promoted healthy replica of order database to primary",
         {}),
        (17, "communication", "bridge_transcript",
         "Failover complete: error rates recovering, order database healthy again", {}),
        (22, "communication", "chat",
         "Restored traffic gradually and confirmed dependency health", {}),
    ]
    annotations = [
        (14, "Manual failover executed: promoted healthy replica of order database to primary",
         "Mitigate"),
        (22, "Restored traffic gradually and confirmed dependency health", "Resolve"),
    ]
    return beats, annotations, {"title": "Database Connectivity Failure",
                                "service": "OrderDB", "severity": "SEV2"}


def _beats_capacity():
    beats = [
        (1, "telemetry", "alert",
         "Alert triggered: disk capacity exhausted on blob store in west region",
         {"severity": "SEV-3"}),
        (6, "communication", "chat",
         "Assessing impact: uploads degraded for customers affected in west region", {}),
        (11, "communication", "bridge_transcript",
         "Hypothesis: runaway log growth suspected on storage layer", {}),
        (13, "communication", "bridge_transcript",
         "Mitigation started: draining writes and throttling ingest initiated", {}),
        (17, "communication", "bridge_transcript",
         "Capacity pressure relieved after extra storage came online, ingest throttling easing and backlog stabilizing",
         {}),
        (20, "communication", "chat",
         "Provisioned additional storage capacity in west region", {}),
    ]
    annotations = [
        (13, "Drained writes and throttled ingest on blob store", "Mitigate"),
        (20, "Provisioned additional storage capacity in west region", "Resolve"),
    ]
    return beats, annotations, {"title": "Storage Capacity Exhaustion",
                                "service": "BlobStore", "severity": "SEV3"}


def _beats_cascade():
    beats = [
        (1, "telemetry", "alert",
         "Alert triggered: load balancer health checks degraded, cache tier erroring",
         {"severity": "SEV-2"}),
        (6, "communication", "chat",
         "Assessing impact: checkout api latency rising, customers affected across east region",
         {}),
        (11, "communication", "bridge_transcript",
         "Investigating root cause: cache tier crash suspected after load balancer config change",
         {}),
        (13, "communication", "bridge_transcript",
         "Root cause identified and confirmed: bad load balancer config change", {}),
        (16, "communication", "bridge_transcript",
         "Mitigation started: rolling back load balancer config", {}),
        (21, "communication", "bridge_transcript",
         "Cache tier back to normal: load balancer config rollback complete, dependency health verified",
         {}),
        (26, "communication", "chat",
         "Redirected traffic and validated dependency health for cache tier", {}),
    ]
    annotations = [
        (16, "Rolled back the load balancer configuration change", "Mitigate"),
        (26, "Redirected traffic and validated dependency health for cache tier",
         "Resolve"),
    ]
    return beats, annotations, {"title": "Load Balancer Config Cascade",
                                "service": "CacheTier", "severity": "SEV2"}


def _beats_staged():
    beats = [
        (1, "telemetry", "alert",
         "Alert triggered: synthetic probe detected elevated errors on checkout api",
         {"severity": "SEV-3"}),
        (2, "communication", "chat",
         "Escalated page to on-call engineer", {}),
        (6, "communication", "bridge_transcript",
         "Assessing impact: error rate at two percent, customers affected minimal", {}),
        (8, "communication", "chat",
         "Escalated severity and notified dependent teams", {}),
        (11, "communication", "bridge_transcript",
         "Investigating root cause: hypothesis cache tier misses spiking", {}),
        (16, "communication", "bridge_transcript",
         "Mitigation started: cache tier node restarts beginning now", {}),
        (17, "communication", "chat",
         "Executed triage checklist for checkout api", {}),
        (21, "communication", "bridge_transcript",
         "Cache tier nodes healthy again, error rates recovering and stabilized", {}),
        (22, "communication", "chat",
         "Restarted cache tier nodes in a rolling fashion", {}),
        (27, "communication", "chat",
         "Restored traffic and confirmed recovery", {}),
    ]
    annotations = [
        (2, "Escalated page to on-call engineer", "Detect"),
        (8, "Escalated severity and notified dependent teams", "Assess"),
        (17, "Executed triage checklist for checkout api", "Investigate"),
        (22, "Restarted cache tier nodes in a rolling fashion", "Mitigate"),
        (27, "Restored traffic and confirmed recovery", "Resolve"),
    ]
    return beats, annotations, {"title": "Elevated Error Drill",
                                "service": "CheckoutAPI", "severity": "SEV3"}


_SCENARIOS = {
    "thermal": _beats_thermal,
    "thermal_paraphrase": _beats_thermal_paraphrase,
    "db_failover": _beats_db_failover,
    "capacity": _beats_capacity,
    "cascade": _beats_cascade,
    "staged": _beats_staged,
}

_MIXED_CYCLE = ("thermal", "db_failover", "capacity", "cascade")

# Inert filler: no entity aliases, no stage/severity keywords, no action verbs.
_CHATTER = (
    "Joining the bridge now",
    "Can someone share the dashboard link",
    "Acknowledged, standing by",
    "On mute, one moment",
    "Thanks for the update",
    "Will circle back in five minutes",
    "Let me know if anything is needed",
    "Summary doc is being drafted",
    "No change on my side",
    "Call notes will be shared afterwards",
)

_TAIL_MINUTES = 150
_CHATTER_RATE = 1.3  # expected chatter lines per minute


def _scenario_trace(profile: str, seed: int, index: int) -> Trace:
    if profile not in _SCENARIOS:
        raise UnknownProfile(f"unknown corpus profile {profile!r}")
    beats, raw_annotations, meta = _SCENARIOS[profile]()
    rng = random.Random(f"{seed}:{profile}:{index}")
    incident_id = f"{profile}-{seed}-{index}"
    base = BASE_TS + index * _DAY_MS

    signals: list[RawSignal] = []
    for minute, modality, source, payload, attrs in beats:
        signals.append(RawSignal(
            incident_id=incident_id,
            ts=base + minute * _MIN_MS,
            modality=modality,
            source=source,
            payload=payload,
            attrs=dict(attrs),
        ))
    # deliberate duplicate: re-send the opening alert inside the same minute
    first = signals[0]
    signals.append(RawSignal(
        incident_id=incident_id, ts=first.ts + 10_000,
        modality=first.modality, source=first.source,
        payload=first.payload, attrs=dict(first.attrs),
    ))

    counter = 0
    for minute in range(0, _TAIL_MINUTES):
        n = sum(1 for _ in range(3) if rng.random() < _CHATTER_RATE / 3)
        for _ in range(n):
            counter += 1
            line = rng.choice(_CHATTER)
            offset = rng.randrange(0, _MIN_MS)
            signals.append(RawSignal(
                incident_id=incident_id,
                ts=base + minute * _MIN_MS + offset,
                modality="communication",
                source="chat",
                payload=f"{line} ({counter})",
                attrs={},
            ))

    signals.sort(key=lambda s: (s.ts, s.source, s.payload))
    annotations = [
        Annotation(
            ts=base + minute * _MIN_MS,
            action_text=text,
            stage=stage,
            source_quote=_quote_for(beats, minute),
        )
        for minute, text, stage in raw_annotations
    ]
    incident_meta = dict(meta)
    incident_meta["incident_id"] = incident_id
    return Trace(
        trace_id=incident_id,
        incident_meta=incident_meta,
        signals=signals,
        annotations=annotations,
    )


def _quote_for(beats, minute: int) -> str:
    for m, _modality, _source, payload, _attrs in beats:
        if m == minute:
            return payload
    return ""


def generate_corpus(seed: int, n_traces: int, profile: str = "mixed") -> list[Trace]:
    if n_traces < 1:
        raise ValueError("n_traces must be >= 1")
    traces = []
    for i in range(n_traces):
        if profile == "mixed":
            name = _MIXED_CYCLE[i % len(_MIXED_CYCLE)]
        else:
            name = profile
        traces.append(_scenario_trace(name, seed, i))
    return traces


# ---------------------------------------------------------------------------
# trace file format: one JSON object per line, meta record first

def save_trace(trace: Trace, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "type": "meta",
            "trace_id": trace.trace_id,
            "incident_meta": trace.incident_meta,
            "annotations": [a.to_dict() for a in trace.annotations],
        }, sort_keys=True) + "\n")
        for sig in trace.signals:
            record = {"type": "signal"}
            record.update(sig.to_dict())
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_trace(path: str) -> Trace:
    signals = []
    meta = {}
    annotations = []
    trace_id = ""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("type") == "meta":
                trace_id = record["trace_id"]
                meta = record["incident_meta"]
                annotations = [Annotation(**a) for a in record["annotations"]]
            else:
                record.pop("type", None)
                signals.append(RawSignal.from_dict(record))
    signals.sort(key=lambda s: (s.ts, s.source, s.payload))
    return Trace(trace_id=trace_id, incident_meta=meta, signals=signals,
                 annotations=annotations)
