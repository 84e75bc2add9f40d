"""Decision core: align events to a precondition, retrieve memories, and
recommend the next action with a bounded broaden-and-retry loop."""

from __future__ import annotations

import json
import re

from ..config import PipelineConfig
from ..errors import NoEvents, UnknownIncident
from ..gateway import (
    SECTION_EPISODES,
    SECTION_KNOWLEDGE,
    SECTION_RECENT,
    SECTION_SITUATION,
    SECTION_SYSTEM,
    SECTION_TASK,
    Gateway,
    make_request,
)
from ..memory import (
    AttemptedAction,
    EpisodicStore,
    KcaStore,
    WorkingMemory,
)
from ..memory.types import WorkingMemoryState
from ..perception.types import CriticalEvent
from ..util import stable_id, ts_to_iso
from .types import Abstain, FeedbackRecord, Precondition, Recommendation, RetrievalBundle

_SLOT_RE = re.compile(r"\{(\w+)\}")

_SYSTEM_LINE = (
    "You are a reasoning agent that recommends outage mitigation actions "
    "based on structured context and operational knowledge."
)
_TASK_LINE = (
    "Given the current precondition, observations, and knowledge, "
    "recommend the next mitigation or recovery action."
)


class ReasoningEngine:
    def __init__(self, gateway: Gateway, kca_store: KcaStore,
                 episodic_store: EpisodicStore, working: WorkingMemory,
                 config: PipelineConfig | None = None):
        self.gateway = gateway
        self.kca_store = kca_store
        self.episodic_store = episodic_store
        self.working = working
        self.config = config or PipelineConfig()
        self.open_recommendations: dict[str, list[Recommendation]] = {}
        self.precondition_history: dict[str, list[tuple[int, str, str]]] = {}
        self.feedback_log: dict[str, list[FeedbackRecord]] = {}
        self.titles: dict[str, str] = {}

    def set_title(self, incident_id: str, title: str):
        self.titles[incident_id] = title

    # ------------------------------------------------------------------
    # Step 1: events -> precondition

    def align_precondition(self, events: list[CriticalEvent],
                           wm: WorkingMemoryState) -> Precondition:
        if not events:
            raise NoEvents("cannot align an empty event batch")
        incident_id = events[0].incident_id
        if any(e.incident_id != incident_id for e in events):
            raise NoEvents("events span multiple incidents")
        service = ""
        severity = "unknown"
        context_summary = ""
        if wm.latest_context is not None:
            severity = wm.latest_context.severity
            context_summary = wm.latest_context.summary
            services = sorted(
                e.canonical_name for e in wm.latest_context.affected_entities
                if e.kind == "service"
            )
            if services:
                service = services[0]
        req = make_request(
            [
                ("Stage", wm.current_stage),
                ("Service", service),
                ("Events", "\n".join(e.summary for e in events)),
                ("Context", context_summary),
            ],
            schema_hint="precondition",
        )
        ts = max(e.ts for e in events)
        text = self.gateway.complete(req, incident_id=incident_id, ts_ms=ts)
        precondition = Precondition(
            incident_id=incident_id,
            ts=ts,
            text=text,
            meta={
                "stage": wm.current_stage,
                "affected_service": service,
                "severity": severity,
                "outage_title": self.titles.get(incident_id, incident_id),
            },
            supporting_events=[e.event_id for e in events],
        )
        self.precondition_history.setdefault(incident_id, []).append(
            (ts, wm.current_stage, text)
        )
        return precondition

    # ------------------------------------------------------------------
    # Step 2: retrieval

    def retrieve_context(self, p: Precondition, k: int | None = None,
                         m: int | None = None,
                         service_filter: bool = True) -> RetrievalBundle:
        k = k or self.config.top_k
        m = m or self.config.top_m
        key_text = f"{p.meta['stage']} {p.meta['affected_service']}".strip()
        kca_hits = self.kca_store.retrieve(
            key_text=key_text or None, condition_text=p.text, k=k
        )
        filters = {}
        if service_filter and p.meta.get("affected_service"):
            filters["service"] = p.meta["affected_service"]
        episodic_hits = self.episodic_store.retrieve(p.text, m=m, filters=filters)
        return RetrievalBundle(
            kca_hits=kca_hits,
            episodic_hits=episodic_hits,
            working=self.working.snapshot(p.incident_id),
        )

    # ------------------------------------------------------------------
    # Step 3: recommendation with refinement

    def recommend(self, p: Precondition,
                  bundle: RetrievalBundle | None = None):
        cfg = self.config
        k, m = cfg.top_k, cfg.top_m
        service_filter = True
        if bundle is None:
            bundle = self.retrieve_context(p, k, m, service_filter)
        last_reason = "no recommendation produced"
        for round_no in range(1, cfg.max_rounds + 1):
            candidates = self._candidates(p, bundle)
            verdict = self._policy_call(p, bundle, candidates, round_no)
            if "action" in verdict:
                rec = self._build_recommendation(p, verdict, round_no)
                if rec.confidence >= cfg.min_confidence:
                    self.open_recommendations.setdefault(
                        p.incident_id, []
                    ).append(rec)
                    self._bump_recommended(rec)
                    return rec
                last_reason = (
                    f"confidence {rec.confidence:.2f} below minimum "
                    f"{cfg.min_confidence:.2f}"
                )
            else:
                last_reason = verdict.get("missing", "insufficient context")
            # broaden: double the retrieval scope, drop the service filter
            k, m = k * 2, m * 2
            service_filter = False
            bundle = self.retrieve_context(p, k, m, service_filter)
        return Abstain(
            incident_id=p.incident_id,
            ts=p.ts,
            reason=last_reason,
            refinement_rounds_used=cfg.max_rounds,
            stage=p.meta["stage"],
        )

    def _candidates(self, p: Precondition, bundle: RetrievalBundle):
        """Retrieved units minus anything too close to an already-attempted
        action (working memory keeps us from re-recommending)."""
        attempted = [a.action_text for a in bundle.working.attempted_actions]
        attempted_vecs = self.gateway.embed(attempted) if attempted else []

        def suppressed(action_text: str) -> bool:
            if not attempted_vecs:
                return False
            vec = self.gateway.embed_one(action_text)
            return any(vec.cosine(av) >= self.config.suppress_threshold
                       for av in attempted_vecs)

        kca_lines, case_lines = [], []
        kept_kca, kept_cases = [], []
        for entry, score in bundle.kca_hits:
            if suppressed(entry.action_template):
                continue
            kept_kca.append((entry, score))
            kca_lines.append(
                f"- [kca:{entry.kca_id}] if {entry.condition} "
                f"then {entry.action_template}"
            )
        for case, score in bundle.episodic_hits:
            successful = [a for a in case.actions if a.outcome == "success"]
            if not successful:
                continue
            action = successful[-1]
            if suppressed(action.action_text):
                continue
            kept_cases.append((case, score))
            case_lines.append(
                f"- [case:{case.case_id}] {case.precondition_text()} "
                f"=> {action.action_text}"
            )
        return {
            "kca_lines": kca_lines,
            "case_lines": case_lines,
            "kca_hits": kept_kca,
            "case_hits": kept_cases,
        }

    def _policy_call(self, p: Precondition, bundle: RetrievalBundle,
                     candidates: dict, round_no: int) -> dict:
        wm = bundle.working
        recent = "\n".join(
            f"{ts_to_iso(e.ts)} {e.summary}" for e in wm.recent_events[-10:]
        )
        if wm.attempted_actions:
            recent += "\nAlready attempted: " + "; ".join(
                a.action_text for a in wm.attempted_actions[-5:]
            )
        situation = (
            f"{p.text} (Stage: {p.meta['stage']}; "
            f"Outage: \"{p.meta['outage_title']}\")"
        )
        req = make_request(
            [
                (SECTION_SYSTEM, _SYSTEM_LINE),
                (SECTION_SITUATION, situation),
                (SECTION_RECENT, recent),
                (SECTION_KNOWLEDGE, "\n".join(candidates["kca_lines"])),
                (SECTION_EPISODES, "\n".join(candidates["case_lines"])),
                (SECTION_TASK, _TASK_LINE),
            ],
            schema_hint="recommendation",
        )
        raw = self.gateway.complete(req, incident_id=p.incident_id, ts_ms=p.ts)
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return {"insufficient": True, "missing": "unparseable policy output"}

    def _build_recommendation(self, p: Precondition, verdict: dict,
                              round_no: int) -> Recommendation:
        source = verdict.get("source", "")
        supports = {"kca_ids": [], "case_ids": []}
        if source.startswith("kca:"):
            supports["kca_ids"].append(source[4:])
        elif source.startswith("case:"):
            supports["case_ids"].append(source[5:])
        action_text, unfilled = self._instantiate(verdict["action"], p)
        confidence = max(
            0.0, float(verdict.get("confidence", 0.0)) - 0.1 * unfilled
        )
        rationale = verdict.get("rationale", "")
        if not supports["kca_ids"] and not supports["case_ids"]:
            rationale = "cold-start generation: " + (rationale or "no support")
        return Recommendation(
            rec_id=stable_id("rec", p.incident_id, str(p.ts), action_text),
            incident_id=p.incident_id,
            ts=p.ts,
            action_text=action_text,
            rationale=rationale,
            supports=supports,
            confidence=round(confidence, 2),
            stage=p.meta["stage"],
            refinement_rounds_used=round_no,
        )

    def _instantiate(self, template: str, p: Precondition) -> tuple[str, int]:
        values = {"service": p.meta.get("affected_service", "")}
        wm = self.working.open(p.incident_id)
        if wm.latest_context is not None:
            for kind in ("region", "component", "team"):
                names = sorted(
                    e.canonical_name for e in wm.latest_context.affected_entities
                    if e.kind == kind
                )
                if names:
                    values[kind] = names[0]
        unfilled = 0
        def fill(match):
            nonlocal unfilled
            name = match.group(1)
            if values.get(name):
                return values[name]
            unfilled += 1
            return "{" + name + "}"
        return _SLOT_RE.sub(fill, template), unfilled

    def _bump_recommended(self, rec: Recommendation):
        for kca_id in rec.supports["kca_ids"]:
            self.kca_store.get(kca_id).stats.times_recommended += 1

    # ------------------------------------------------------------------
    # feedback = implicit reward

    def record_feedback(self, incident_id: str, ts: int,
                        human_action_text: str,
                        rec_id: str | None = None,
                        disposition_hint: str | None = None,
                        result: str = "unknown") -> FeedbackRecord:
        if incident_id not in self.working._states and \
                incident_id not in self.open_recommendations:
            raise UnknownIncident(f"no such incident {incident_id!r}")
        fb = FeedbackRecord(
            incident_id=incident_id,
            ts=ts,
            human_action_text=human_action_text,
            result=result,
        )
        open_recs = [
            r for r in self.open_recommendations.get(incident_id, [])
            if r.status == "proposed"
        ]
        target = None
        if rec_id is not None:
            target = next((r for r in open_recs if r.rec_id == rec_id), None)
        if disposition_hint == "dismissed":
            fb.disposition = "dismissed"
            if target is not None:
                target.status = "dismissed"
                fb.rec_id = target.rec_id
                self._apply_reward(target, confirmed=False)
        else:
            if target is None and open_recs:
                text_vec = self.gateway.embed_one(human_action_text)
                scored = []
                for r in open_recs:
                    score = text_vec.cosine(
                        self.gateway.embed_one(r.action_text))
                    scored.append((score, r.rec_id, r))
                scored.sort(key=lambda t: (-t[0], t[1]))
                if scored and scored[0][0] >= self.config.match_threshold:
                    target = scored[0][2]
                    fb.match_score = round(scored[0][0], 4)
            elif target is not None:
                fb.match_score = 1.0
            if target is not None:
                fb.disposition = "executed_matching"
                fb.rec_id = target.rec_id
                target.status = "executed"
                self._apply_reward(target, confirmed=True)
            else:
                fb.disposition = "executed_other"
        if fb.disposition != "dismissed" and not self.working.is_closed(incident_id):
            self.working.record(
                incident_id,
                AttemptedAction(action_text=human_action_text, ts=ts,
                                result=result),
            )
        self.feedback_log.setdefault(incident_id, []).append(fb)
        return fb

    def _apply_reward(self, rec: Recommendation, confirmed: bool):
        for kca_id in rec.supports["kca_ids"]:
            stats = self.kca_store.get(kca_id).stats
            if confirmed:
                stats.times_confirmed += 1
            else:
                stats.times_rejected += 1

    def expire_recommendations(self, incident_id: str, now_ms: int,
                               ttl_s: int | None = None) -> list[str]:
        ttl = (ttl_s if ttl_s is not None
               else self.config.recommendation_ttl_s) * 1000
        expired = []
        for rec in self.open_recommendations.get(incident_id, []):
            if rec.status == "proposed" and now_ms - rec.ts > ttl:
                rec.status = "expired"
                expired.append(rec.rec_id)
        return expired
