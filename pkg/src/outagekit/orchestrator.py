"""Per-incident pipeline: windowing, decision points, ordered stream records,
and journal-based crash recovery.

All externally visible state derives from an append-only journal of inputs
(signals, feedback, close, memory admin ops). Because the whole pipeline is
deterministic in mock mode, restarting and replaying the journal rebuilds
the exact same stream record sequence.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

from .config import PipelineConfig
from .errors import (
    IncidentClosed,
    NothingToPromote,
    OutageKitError,
    UnknownIncident,
)
from .gateway import Gateway, make_gateway
from .memory import Consolidator, EpisodicStore, KcaStore, PlaybookDoc, WorkingMemory
from .perception import ContextState, Duplicate, Perceptor, RawSignal, Topology
from .reasoning import Abstain, ReasoningEngine
from .reasoning.types import Recommendation


@dataclass
class StreamRecord:
    seq: int
    kind: str  # critical_event | recommendation | feedback_ack | state
    body: dict

    def to_dict(self):
        return {"seq": self.seq, "kind": self.kind, "body": self.body}


@dataclass
class IncidentHandle:
    incident_id: str
    title: str
    created_at: int
    status: str = "open"  # open -> closed
    current_stage: str = "Detect"
    stream_cursor: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class _IncidentRuntime:
    handle: IncidentHandle
    records: list[StreamRecord] = field(default_factory=list)
    window_start: int | None = None
    window_buffer: list = field(default_factory=list)
    prev_state: ContextState | None = None
    max_ts: int = 0
    listeners: list = field(default_factory=list)


class Orchestrator:
    def __init__(self, topology: Topology, config: PipelineConfig | None = None,
                 gateway: Gateway | None = None, data_dir: str | None = None):
        self.config = config or PipelineConfig()
        self.data_dir = data_dir
        prompt_log_dir = os.path.join(data_dir, "prompts") if data_dir else None
        self.gateway = gateway or make_gateway(self.config.provider, prompt_log_dir)
        self.topology = topology
        self.perceptor = Perceptor(self.gateway, topology, self.config)
        audit_path = os.path.join(data_dir, "kca_audit.jsonl") if data_dir else None
        self.kca_store = KcaStore(self.gateway, audit_log_path=audit_path)
        self.episodic_store = EpisodicStore(self.gateway)
        self.working = WorkingMemory(
            event_cap=self.config.working_event_cap,
            note_cap=self.config.working_note_cap,
        )
        self.consolidator = Consolidator(
            self.gateway, self.kca_store,
            dedup_threshold=self.config.dedup_threshold,
        )
        self.reasoner = ReasoningEngine(
            self.gateway, self.kca_store, self.episodic_store, self.working,
            self.config,
        )
        self.incidents: dict[str, _IncidentRuntime] = {}
        self._lock = threading.RLock()
        self._recovering = False
        if data_dir:
            os.makedirs(data_dir, exist_ok=True)
            self._recover()

    # ------------------------------------------------------------------
    # journal

    @property
    def _journal_path(self):
        return os.path.join(self.data_dir, "journal.jsonl") if self.data_dir else None

    def _journal(self, op: str, payload: dict):
        if self._recovering or not self._journal_path:
            return
        with open(self._journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"op": op, "payload": payload},
                                sort_keys=True) + "\n")
            fh.flush()

    def _recover(self):
        path = self._journal_path
        if not path or not os.path.exists(path):
            return
        self._recovering = True
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    try:
                        self._apply(entry["op"], entry["payload"])
                    except OutageKitError:
                        # the live run journaled the input before rejecting
                        # it; rejecting it again leaves the same state
                        continue
        finally:
            self._recovering = False

    def _apply(self, op: str, payload: dict):
        if op == "create_incident":
            self.create_incident(payload["incident_id"], payload["title"],
                                 payload["ts"])
        elif op == "signal":
            self.ingest_signal(payload["incident_id"],
                               RawSignal.from_dict(payload["signal"]))
        elif op == "feedback":
            self.post_feedback(payload["incident_id"], payload)
        elif op == "close":
            self.close_incident(payload["incident_id"], payload["ts"])
        elif op == "kca_admin":
            self.kca_admin(payload["admin_op"], payload["body"],
                           payload.get("now_ms", 0))
        elif op == "playbook":
            self.add_playbook(payload["doc_id"], payload["body"],
                              payload.get("title", ""), payload.get("service", ""),
                              payload.get("now_ms", 0))
        elif op == "consolidate":
            self.consolidate(payload.get("now_ms", 0))
        else:
            raise ValueError(f"unknown journal op {op!r}")

    # ------------------------------------------------------------------
    # incidents

    def create_incident(self, incident_id: str, title: str, ts: int) -> IncidentHandle:
        with self._lock:
            if incident_id in self.incidents:
                return self.incidents[incident_id].handle
            handle = IncidentHandle(incident_id=incident_id, title=title,
                                    created_at=ts)
            self.incidents[incident_id] = _IncidentRuntime(handle=handle)
            self.working.open(incident_id)
            self.reasoner.set_title(incident_id, title)
            self._journal("create_incident", {
                "incident_id": incident_id, "title": title, "ts": ts,
            })
            return handle

    def _runtime(self, incident_id: str) -> _IncidentRuntime:
        rt = self.incidents.get(incident_id)
        if rt is None:
            raise UnknownIncident(f"no such incident {incident_id!r}")
        return rt

    def _emit(self, rt: _IncidentRuntime, kind: str, body: dict) -> StreamRecord:
        rt.handle.stream_cursor += 1
        record = StreamRecord(seq=rt.handle.stream_cursor, kind=kind, body=body)
        rt.records.append(record)
        for listener in list(rt.listeners):
            listener(record)
        return record

    # ------------------------------------------------------------------
    # signal ingestion and windowing

    def ingest_signal(self, incident_id: str, sig: RawSignal) -> int:
        with self._lock:
            rt = self._runtime(incident_id)
            if rt.handle.status == "closed":
                raise IncidentClosed(f"incident {incident_id} is closed")
            self._journal("signal", {
                "incident_id": incident_id, "signal": sig.to_dict(),
            })
            rt.max_ts = max(rt.max_ts, sig.ts)
            window_ms = self.config.window_length_s * 1000
            if rt.window_start is None:
                rt.window_start = (sig.ts // window_ms) * window_ms
            # close every window the new signal has moved past
            while sig.ts >= rt.window_start + window_ms:
                self._close_window(rt)
            obs = self.perceptor.normalize(sig, now_ms=max(rt.max_ts, sig.ts))
            if isinstance(obs, Duplicate):
                return rt.handle.stream_cursor
            obs = self.perceptor.enrich(obs)
            summary = rt.prev_state.summary if rt.prev_state else None
            obs = self.perceptor.classify(
                obs, rt.handle.current_stage, context_summary=summary
            )
            rt.window_buffer.append(obs)
            return rt.handle.stream_cursor

    def _close_window(self, rt: _IncidentRuntime):
        window_ms = self.config.window_length_s * 1000
        incident_id = rt.handle.incident_id
        index = rt.prev_state.window_index + 1 if rt.prev_state else 0
        state = self.perceptor.aggregate(
            incident_id, index, rt.window_buffer, rt.prev_state,
            window_start=rt.window_start,
        )
        rt.window_buffer = []
        rt.window_start += window_ms
        baseline = rt.prev_state or ContextState(
            incident_id=incident_id, window_index=-1,
            window_start=state.window_start - window_ms,
            window_end=state.window_start,
        )
        delta = self.perceptor.compute_delta(baseline, state)
        events = self.perceptor.promote(delta, state)
        rt.prev_state = state
        self.working.set_context(incident_id, state)
        rt.handle.current_stage = state.phase
        self._emit(rt, "state", state.to_dict())
        for event in events:
            self.working.record(incident_id, event)
            self._emit(rt, "critical_event", event.to_dict())
        if events:
            self._decision_point(rt, events)

    def _decision_point(self, rt: _IncidentRuntime, events):
        incident_id = rt.handle.incident_id
        self.reasoner.expire_recommendations(incident_id, now_ms=rt.max_ts)
        wm = self.working.snapshot(incident_id)
        precondition = self.reasoner.align_precondition(events, wm)
        bundle = self.reasoner.retrieve_context(precondition)
        outcome = self.reasoner.recommend(precondition, bundle)
        body = outcome.to_dict()
        body["precondition"] = precondition.to_dict()
        body["abstained"] = isinstance(outcome, Abstain)
        self._emit(rt, "recommendation", body)

    def flush(self, incident_id: str):
        """Close any window that has buffered observations (end of trace)."""
        with self._lock:
            rt = self._runtime(incident_id)
            if rt.window_buffer:
                self._close_window(rt)

    # ------------------------------------------------------------------
    # feedback and close

    def post_feedback(self, incident_id: str, payload: dict):
        with self._lock:
            rt = self._runtime(incident_id)
            self._journal("feedback", {
                "incident_id": incident_id,
                "ts": payload["ts"],
                "human_action_text": payload["human_action_text"],
                "rec_id": payload.get("rec_id"),
                "disposition_hint": payload.get("disposition_hint"),
                "result": payload.get("result", "unknown"),
            })
            fb = self.reasoner.record_feedback(
                incident_id,
                ts=payload["ts"],
                human_action_text=payload["human_action_text"],
                rec_id=payload.get("rec_id"),
                disposition_hint=payload.get("disposition_hint"),
                result=payload.get("result", "unknown"),
            )
            self._emit(rt, "feedback_ack", fb.to_dict())
            return fb

    def close_incident(self, incident_id: str, ts: int) -> dict:
        with self._lock:
            rt = self._runtime(incident_id)
            if rt.handle.status == "closed":
                return {"incident_id": incident_id, "status": "closed",
                        "case_id": None}
            self._journal("close", {"incident_id": incident_id, "ts": ts})
            if rt.window_buffer:
                self._close_window(rt)
            rt.handle.status = "closed"
            self.working.close(incident_id)
            case_id = None
            try:
                case = self.working.promote_to_episodic(
                    incident_id,
                    feedback=self.reasoner.feedback_log.get(incident_id, []),
                    precondition_history=self.reasoner.precondition_history.get(
                        incident_id, []),
                    gateway=self.gateway,
                )
                case.incident_meta["title"] = rt.handle.title
                self.episodic_store.add(case)
                case_id = case.case_id
            except NothingToPromote:
                pass
            return {"incident_id": incident_id, "status": "closed",
                    "case_id": case_id}

    # ------------------------------------------------------------------
    # stream access

    def stream(self, incident_id: str, from_seq: int = 0) -> list[StreamRecord]:
        rt = self._runtime(incident_id)
        return [r for r in rt.records if r.seq > from_seq]

    def add_listener(self, incident_id: str, listener):
        self._runtime(incident_id).listeners.append(listener)

    def remove_listener(self, incident_id: str, listener):
        rt = self._runtime(incident_id)
        if listener in rt.listeners:
            rt.listeners.remove(listener)

    def recommendations(self, incident_id: str) -> list[Recommendation]:
        return list(self.reasoner.open_recommendations.get(incident_id, []))

    # ------------------------------------------------------------------
    # memory administration

    def kca_admin(self, admin_op: str, body: dict, now_ms: int = 0):
        self._journal("kca_admin", {
            "admin_op": admin_op, "body": body, "now_ms": now_ms,
        })
        return self.kca_store.expert_review(admin_op, body,
                                            actor=body.get("actor", "expert"),
                                            now_ms=now_ms)

    def add_playbook(self, doc_id: str, body: str, title: str = "",
                     service: str = "", now_ms: int = 0) -> dict:
        self._journal("playbook", {
            "doc_id": doc_id, "body": body, "title": title,
            "service": service, "now_ms": now_ms,
        })
        result = self.consolidator.distill_playbook(
            PlaybookDoc(doc_id=doc_id, body=body, title=title, service=service),
            now_ms=now_ms,
        )
        return {
            "created": [e.kca_id for e in result["created"]],
            "merged": result["merged"],
        }

    def consolidate(self, now_ms: int = 0) -> dict:
        self._journal("consolidate", {"now_ms": now_ms})
        result = self.consolidator.consolidate(self.episodic_store.cases(),
                                               now_ms=now_ms)
        return {
            "created": [e.kca_id for e in result["created"]],
            "merged": result["merged"],
        }
