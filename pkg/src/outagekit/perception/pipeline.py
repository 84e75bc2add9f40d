"""Signal normalization, enrichment, windowed aggregation, and promotion
of significant state changes to critical events."""

from __future__ import annotations

import time

from ..config import PipelineConfig
from ..errors import (
    MalformedSignal,
    TemporalViolation,
    UnknownModality,
    WindowOrderViolation,
)
from ..gateway import Gateway, make_request
from ..stages import max_phase, phase_rank, tag_phase
from ..util import clip01, stable_id, token_overlap, ts_to_iso
from . import rules
from .topology import Topology, canonicalize_payload, entities_from_attrs
from .types import (
    MODALITIES,
    ContextState,
    CriticalEvent,
    Duplicate,
    Observation,
    RawSignal,
    StateDelta,
    Tags,
)

_MITIGATION_LABEL_LEN = 80


def _mitigation_label(payload: str) -> str:
    return canonicalize_payload(payload)[:_MITIGATION_LABEL_LEN]


class Perceptor:
    """Stateful per-process perception front end.

    Holds the dedup index and the observation store per incident; all
    other state lives in the ContextState chain the caller threads
    through aggregate/compute_delta/promote.
    """

    def __init__(self, gateway: Gateway, topology: Topology,
                 config: PipelineConfig | None = None):
        self.gateway = gateway
        self.topology = topology
        self.config = config or PipelineConfig()
        self._seen: dict[str, set[str]] = {}
        self.observations: dict[str, dict[str, Observation]] = {}

    # ------------------------------------------------------------------

    def normalize(self, sig: RawSignal, now_ms: int | None = None):
        if sig.modality not in MODALITIES:
            raise UnknownModality(f"unknown modality {sig.modality!r}")
        allow = self.config.source_allowlist
        if allow and sig.source not in allow:
            raise MalformedSignal(f"source {sig.source!r} not in allow-list")
        now = now_ms if now_ms is not None else int(time.time() * 1000)
        if sig.ts > now + self.config.clock_skew_s * 1000:
            raise TemporalViolation(
                f"ts {ts_to_iso(sig.ts)} beyond skew bound (now {ts_to_iso(now)})"
            )
        minute_bucket = sig.ts // 60000
        dedup_key = stable_id(
            "obs", sig.source, canonicalize_payload(sig.payload), str(minute_bucket)
        )
        seen = self._seen.setdefault(sig.incident_id, set())
        if dedup_key in seen:
            return Duplicate(dedup_key=dedup_key)
        seen.add(dedup_key)
        obs = Observation(
            incident_id=sig.incident_id,
            ts=sig.ts,
            modality=sig.modality,
            source=sig.source,
            payload=sig.payload,
            attrs=dict(sig.attrs),
            dedup_key=dedup_key,
        )
        self.observations.setdefault(sig.incident_id, {})[dedup_key] = obs
        return obs

    def enrich(self, obs: Observation) -> Observation:
        mentions = self.topology.find_mentions(obs.payload)
        from_attrs = entities_from_attrs(obs.attrs, self.topology)
        by_name = {}
        for ref in mentions + from_attrs:
            by_name.setdefault(ref.canonical_name, ref)
        obs.entities = [by_name[name] for name in sorted(by_name)]
        deps: set[str] = set()
        for ref in obs.entities:
            if not ref.unresolved:
                deps.update(self.topology.neighbors(ref.canonical_name))
        obs.dependency_context = sorted(deps)
        return obs

    def classify(self, obs: Observation, incident_phase: str,
                 context_summary: str | None = None) -> Observation:
        severity = rules.canonical_severity(obs.attrs.get("severity"))
        if severity is None:
            severity = rules.severity_in_text(obs.payload) or "unknown"

        explicit_phase = obs.attrs.get("phase")
        if explicit_phase and phase_rank(explicit_phase) >= 0:
            phase = explicit_phase
        else:
            phase = tag_phase(obs.payload) or incident_phase

        if context_summary:
            payload_vec, summary_vec = self.gateway.embed(
                [obs.payload, context_summary]
            )
            relevance = clip01(payload_vec.cosine(summary_vec))
        else:
            relevance = 1.0

        obs.tags = Tags(
            phase=phase,
            event_type=rules.classify_event_type(obs.payload),
            severity=severity,
            relevance=relevance,
        )
        return obs

    # ------------------------------------------------------------------

    def aggregate(self, incident_id: str, window_index: int,
                  observations: list[Observation],
                  prev: ContextState | None,
                  window_start: int) -> ContextState:
        if prev is not None and window_index != prev.window_index + 1:
            raise WindowOrderViolation(
                f"window {window_index} after {prev.window_index}"
            )
        if prev is None and window_index != 0:
            raise WindowOrderViolation(f"first window must be 0, got {window_index}")
        window_end = window_start + self.config.window_length_s * 1000

        state = ContextState(
            incident_id=incident_id,
            window_index=window_index,
            window_start=window_start,
            window_end=window_end,
        )
        if prev is not None:
            state.phase = prev.phase
            state.severity = prev.severity
            state.open_hypotheses = list(prev.open_hypotheses)
            state.mitigations_in_flight = list(prev.mitigations_in_flight)
            state.affected_entities = set(prev.affected_entities)
            state.summary = prev.summary

        if not observations:
            return state

        for obs in sorted(observations, key=lambda o: (o.ts, o.dedup_key)):
            state.observation_refs.append(obs.dedup_key)
            state.severity = rules.worse_severity(state.severity, obs.tags.severity)
            if obs.attrs.get("phase") and phase_rank(obs.attrs["phase"]) >= 0:
                state.phase = obs.attrs["phase"]  # explicit attr may regress
            else:
                state.phase = max_phase(state.phase, obs.tags.phase)
            state.affected_entities.update(obs.entities)
            self._fold_mitigations_and_hypotheses(state, obs)

        state.summary = self._summarize(state, observations)
        return state

    def _fold_mitigations_and_hypotheses(self, state: ContextState,
                                         obs: Observation):
        etype = obs.tags.event_type
        label = _mitigation_label(obs.payload)
        if etype in rules.MITIGATION_OPENERS:
            if label not in state.mitigations_in_flight:
                state.mitigations_in_flight.append(label)
        elif etype in rules.MITIGATION_CLOSERS and state.mitigations_in_flight:
            scored = [
                (token_overlap(label, m), i)
                for i, m in enumerate(state.mitigations_in_flight)
            ]
            best_score, best_i = max(scored)
            if best_score >= 0.25:
                state.mitigations_in_flight.pop(best_i)
        elif etype == "hypothesis":
            if label not in state.open_hypotheses:
                state.open_hypotheses.append(label)
        elif etype == "root_cause_identified":
            confirmed = f"confirmed: {label}"
            open_ones = [h for h in state.open_hypotheses
                         if not h.startswith("confirmed:")]
            if open_ones:
                scored = [(token_overlap(label, h), h) for h in open_ones]
                best_score, best_h = max(scored)
                if best_score >= 0.25:
                    state.open_hypotheses.remove(best_h)
                    confirmed = f"confirmed: {best_h}"
            if confirmed not in state.open_hypotheses:
                state.open_hypotheses.append(confirmed)

    def _summarize(self, state: ContextState,
                   observations: list[Observation]) -> str:
        req = make_request(
            [
                ("Phase", state.phase),
                ("Severity", state.severity),
                ("Previous Summary", state.summary),
                ("Observations", "\n".join(
                    o.payload for o in
                    sorted(observations, key=lambda o: (o.ts, o.dedup_key))
                )),
            ],
            schema_hint="context_summary",
        )
        return self.gateway.complete(req, incident_id=state.incident_id,
                                     ts_ms=state.window_end)

    # ------------------------------------------------------------------

    def compute_delta(self, prev: ContextState, cur: ContextState) -> StateDelta:
        if cur.window_index != prev.window_index + 1:
            raise WindowOrderViolation(
                f"delta {prev.window_index} -> {cur.window_index}"
            )
        w = self.config.delta_weights
        changed: list[tuple[str, str, str]] = []
        significance = 0.0

        if cur.phase != prev.phase:
            changed.append(("phase", prev.phase, cur.phase))
            significance += w["phase"]
        if cur.severity != prev.severity:
            changed.append(("severity", prev.severity, cur.severity))
            significance += w["severity"]

        prev_names = {e.canonical_name for e in prev.affected_entities}
        cur_names = {e.canonical_name for e in cur.affected_entities}
        added = sorted(cur_names - prev_names)
        if added:
            changed.append((
                "affected_entities",
                ",".join(sorted(prev_names)),
                ",".join(sorted(cur_names)),
            ))
            significance += min(
                w["affected_entities_per_added"] * len(added),
                w["affected_entities_cap"],
            )
        if cur.mitigations_in_flight != prev.mitigations_in_flight:
            changed.append((
                "mitigations_in_flight",
                "; ".join(prev.mitigations_in_flight),
                "; ".join(cur.mitigations_in_flight),
            ))
            significance += w["mitigations_in_flight"]
        if cur.open_hypotheses != prev.open_hypotheses:
            changed.append((
                "open_hypotheses",
                "; ".join(prev.open_hypotheses),
                "; ".join(cur.open_hypotheses),
            ))
            significance += w["open_hypotheses"]

        return StateDelta(
            from_window=prev.window_index,
            to_window=cur.window_index,
            changed_fields=changed,
            significance=clip01(significance),
        )

    def promote(self, delta: StateDelta, cur: ContextState,
                threshold: float | None = None) -> list[CriticalEvent]:
        thr = threshold if threshold is not None else self.config.promote_threshold
        if delta.significance < thr:
            return []
        events: list[CriticalEvent] = []
        for field, old, new in delta.changed_fields:
            for kind, change_desc, evidence in self._events_for_field(
                    field, old, new, cur):
                events.append(self._build_event(
                    cur, kind, field, change_desc, evidence, delta.significance))
        return events

    def _events_for_field(self, field: str, old: str, new: str,
                          cur: ContextState):
        """Yield (kind, change description, evidence keys) per field group."""
        window_obs = [
            self.observations[cur.incident_id][key]
            for key in cur.observation_refs
        ]

        def refs(pred, fallback=True):
            keys = [o.dedup_key for o in window_obs if pred(o)]
            if not keys and fallback:
                keys = list(cur.observation_refs)
            return keys

        if field == "phase":
            yield ("phase_transition", f"phase {old} -> {new}",
                   refs(lambda o: o.tags.phase == new
                        or o.attrs.get("phase") == new))
        elif field == "severity":
            yield ("severity_change", f"severity {old} -> {new}",
                   refs(lambda o: o.tags.severity == new))
        elif field == "affected_entities":
            added = sorted(set(new.split(",")) - set(filter(None, old.split(","))))
            yield ("scope_expansion", f"scope now includes {', '.join(added)}",
                   refs(lambda o: any(e.canonical_name in added
                                      for e in o.entities)))
        elif field == "mitigations_in_flight":
            old_set = [m for m in old.split("; ") if m]
            new_set = [m for m in new.split("; ") if m]
            started = [m for m in new_set if m not in old_set]
            finished = [m for m in old_set if m not in new_set]
            if started:
                yield ("mitigation_start",
                       f"mitigation started: {'; '.join(started)}",
                       refs(lambda o: o.tags.event_type in
                            rules.MITIGATION_OPENERS))
            if finished:
                closers = [o for o in window_obs
                           if o.tags.event_type in rules.MITIGATION_CLOSERS]
                kind = "mitigation_complete"
                if any("dependency" in o.payload.lower() for o in closers):
                    kind = "dependency_recovery"
                yield (kind, f"mitigation completed: {'; '.join(finished)}",
                       refs(lambda o: o.tags.event_type in
                            rules.MITIGATION_CLOSERS))
        elif field == "open_hypotheses":
            old_set = [h for h in old.split("; ") if h]
            new_set = [h for h in new.split("; ") if h]
            confirmed = [h for h in new_set
                         if h.startswith("confirmed:") and h not in old_set]
            plain = [h for h in new_set
                     if not h.startswith("confirmed:") and h not in old_set]
            if confirmed:
                yield ("root_cause_identified",
                       f"root cause confirmed: {'; '.join(confirmed)}",
                       refs(lambda o: o.tags.event_type ==
                            "root_cause_identified"))
            if plain:
                yield ("other", f"new hypotheses: {'; '.join(plain)}",
                       refs(lambda o: o.tags.event_type == "hypothesis"))

    def _build_event(self, cur: ContextState, kind: str, field: str,
                     change_desc: str, evidence: list[str],
                     significance: float) -> CriticalEvent:
        evidence_payloads = "\n".join(
            self.observations[cur.incident_id][key].payload for key in evidence
        )
        req = make_request(
            [("Kind", kind), ("Change", change_desc),
             ("Evidence", evidence_payloads)],
            schema_hint="event_summary",
        )
        summary = self.gateway.complete(
            req, incident_id=cur.incident_id, ts_ms=cur.window_end
        )[:400]
        return CriticalEvent(
            event_id=stable_id("evt", cur.incident_id,
                               str(cur.window_index), kind, field, change_desc),
            incident_id=cur.incident_id,
            ts=cur.window_end,
            kind=kind,
            summary=summary,
            delta=change_desc,
            evidence=evidence,
            phase=cur.phase,
            significance=significance,
        )
