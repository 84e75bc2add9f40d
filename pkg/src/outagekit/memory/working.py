"""Live per-incident working memory with bounded deques."""

from __future__ import annotations

import copy
import threading

from ..errors import AlreadyPromoted, IncidentClosed, IncidentStillOpen, NothingToPromote
from ..perception.types import ContextState, CriticalEvent
from ..util import token_overlap
from .types import AttemptedAction, CaseAction, EpisodicCase, WorkingMemoryState


class WorkingMemory:
    def __init__(self, event_cap: int = 50, note_cap: int = 50):
        self.event_cap = event_cap
        self.note_cap = note_cap
        self._states: dict[str, WorkingMemoryState] = {}
        self._closed: set[str] = set()
        self._promoted: set[str] = set()
        self._lock = threading.RLock()

    def open(self, incident_id: str) -> WorkingMemoryState:
        with self._lock:
            return self._states.setdefault(
                incident_id, WorkingMemoryState(incident_id=incident_id)
            )

    def is_closed(self, incident_id: str) -> bool:
        return incident_id in self._closed

    def close(self, incident_id: str):
        with self._lock:
            self._closed.add(incident_id)

    def record(self, incident_id: str, item) -> WorkingMemoryState:
        """Append a CriticalEvent, AttemptedAction, or (ts, note) pair."""
        with self._lock:
            if incident_id in self._closed:
                raise IncidentClosed(f"incident {incident_id} is closed")
            state = self.open(incident_id)
            if isinstance(item, CriticalEvent):
                state.recent_events.append(item)
                if len(state.recent_events) > self.event_cap:
                    state.recent_events.pop(0)
                state.current_stage = item.phase
            elif isinstance(item, AttemptedAction):
                state.attempted_actions.append(item)
            elif isinstance(item, tuple) and len(item) == 2:
                state.conversation_notes.append(item)
                if len(state.conversation_notes) > self.note_cap:
                    state.conversation_notes.pop(0)
            else:
                raise TypeError(f"cannot record {type(item).__name__}")
            return state

    def set_context(self, incident_id: str, context: ContextState):
        with self._lock:
            state = self.open(incident_id)
            prev = state.latest_context
            if prev is None or context.window_index > prev.window_index:
                state.latest_context = context
                state.current_stage = context.phase

    def snapshot(self, incident_id: str) -> WorkingMemoryState:
        with self._lock:
            return copy.deepcopy(self.open(incident_id))

    # ------------------------------------------------------------------

    def promote_to_episodic(self, incident_id: str, feedback: list,
                            precondition_history: list[tuple[int, str, str]],
                            gateway) -> EpisodicCase:
        """Build a closed case from the working memory trace.

        Incidents with zero critical events are deliberately not promoted:
        they would only add noise to the case library.
        """
        with self._lock:
            if incident_id not in self._closed:
                raise IncidentStillOpen(f"incident {incident_id} still open")
            if incident_id in self._promoted:
                raise AlreadyPromoted(f"incident {incident_id} already promoted")
            state = self._states.get(incident_id)
            if state is None or not state.recent_events:
                raise NothingToPromote(
                    f"incident {incident_id} produced no critical events"
                )
            actions = [
                CaseAction(
                    action_text=a.action_text,
                    ts=a.ts,
                    outcome=_outcome_for(a, feedback),
                )
                for a in state.attempted_actions
            ]
            meta = {
                "service": "", "severity": "unknown", "title": incident_id,
                "duration_ms": 0,
            }
            if state.latest_context is not None:
                ctx = state.latest_context
                meta["severity"] = ctx.severity
                services = sorted(
                    e.canonical_name for e in ctx.affected_entities
                    if e.kind == "service"
                )
                if services:
                    meta["service"] = services[0]
            closed_at = max(
                [e.ts for e in state.recent_events]
                + [a.ts for a in state.attempted_actions] + [0]
            )
            if state.recent_events:
                meta["duration_ms"] = closed_at - min(
                    e.ts for e in state.recent_events
                )
            case = EpisodicCase(
                case_id=f"case-{incident_id}",
                incident_meta=meta,
                event_sequence=[e.event_id for e in state.recent_events],
                precondition_history=list(precondition_history),
                actions=actions,
                closed_at=closed_at,
            )
            case.case_embedding = gateway.embed_one(
                case.precondition_text() or meta["title"]
            )
            self._promoted.add(incident_id)
            return case


def _outcome_for(attempted: AttemptedAction, feedback: list) -> str:
    """Feedback joins back to attempted actions by text; unmatched stays
    unknown."""
    best = None
    for fb in feedback:
        if getattr(fb, "disposition", "") == "dismissed":
            continue
        text = getattr(fb, "human_action_text", "")
        if text == attempted.action_text:
            return getattr(fb, "result", "unknown")
        score = token_overlap(text, attempted.action_text)
        if score >= 0.5 and (best is None or score > best[0]):
            best = (score, getattr(fb, "result", "unknown"))
    if best:
        return best[1]
    if attempted.result in ("success", "failure"):
        return attempted.result
    return "unknown"
