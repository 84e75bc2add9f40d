"""Distillation of playbooks and closed cases into long-term KCA entries."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import EmptyDocument
from ..gateway import Gateway, make_request
from ..util import stable_id, token_overlap, ts_to_iso
from .kca_store import KcaStore
from .types import EpisodicCase, KcaEntry, KcaKey


@dataclass
class PlaybookDoc:
    doc_id: str
    body: str
    title: str = ""
    service: str = ""


class Consolidator:
    def __init__(self, gateway: Gateway, kca_store: KcaStore,
                 dedup_threshold: float = 0.92):
        self.gateway = gateway
        self.kca_store = kca_store
        self.dedup_threshold = dedup_threshold

    # ------------------------------------------------------------------

    def distill_playbook(self, doc: PlaybookDoc, now_ms: int = 0) -> dict:
        if not doc.body.strip():
            raise EmptyDocument(f"playbook {doc.doc_id} has no body")
        req = make_request(
            [
                ("Document", doc.body),
                ("Title", doc.title or doc.doc_id),
                ("Service", doc.service or "general"),
            ],
            schema_hint="kca_list",
        )
        triples = json.loads(self.gateway.complete(req, ts_ms=now_ms))
        return self._ingest(triples, provenance="playbook",
                            source_ref=doc.doc_id, now_ms=now_ms)

    def consolidate(self, cases: list[EpisodicCase], now_ms: int = 0) -> dict:
        """Distill new knowledge from closed cases and merge near-duplicates
        into existing entries instead of creating copies. Failed actions are
        never distilled into actions."""
        created: list[KcaEntry] = []
        merged: list[str] = []
        for case in cases:
            successful = [a for a in case.actions if a.outcome == "success"]
            if not successful:
                continue
            req = make_request(
                [
                    ("Case Preconditions", "\n".join(
                        f"{ts_to_iso(ts)} | {stage} | {text}"
                        for ts, stage, text in case.precondition_history
                    )),
                    ("Successful Actions", "\n".join(
                        f"{ts_to_iso(a.ts)} | {a.action_text}" for a in successful
                    )),
                    ("Service", case.incident_meta.get("service", "general")
                     or "general"),
                    ("Title", case.incident_meta.get("title", case.case_id)),
                ],
                schema_hint="kca_list",
            )
            triples = json.loads(self.gateway.complete(req, ts_ms=now_ms))
            result = self._ingest(triples, provenance="distilled",
                                  source_ref=case.case_id, now_ms=now_ms)
            created.extend(result["created"])
            merged.extend(result["merged"])
        return {"created": created, "merged": merged}

    # ------------------------------------------------------------------

    def _ingest(self, triples: list[dict], provenance: str, source_ref: str,
                now_ms: int) -> dict:
        created: list[KcaEntry] = []
        merged: list[str] = []
        for triple in triples:
            condition = triple["condition"]
            cond_emb = self.gateway.embed_one(condition)
            duplicate = self._find_duplicate(cond_emb, triple["action_template"])
            if duplicate is not None:
                duplicate.updated_at = now_ms
                if source_ref not in duplicate.merged_sources:
                    duplicate.merged_sources.append(source_ref)
                merged.append(duplicate.kca_id)
                continue
            entry = KcaEntry(
                kca_id=stable_id("kca", source_ref, condition,
                                 triple["action_template"]),
                key=KcaKey.from_dict(triple["key"]),
                condition=condition,
                action_template=triple["action_template"],
                slots=list(triple.get("slots", [])),
                provenance=provenance,
                source_ref=source_ref,
                condition_embedding=cond_emb,
            )
            self.kca_store.upsert(entry, now_ms=now_ms)
            created.append(entry)
        return {"created": created, "merged": merged}

    def _find_duplicate(self, cond_emb, action_template: str) -> KcaEntry | None:
        # A playbook often hangs several distinct steps off one condition,
        # so condition similarity alone would collapse them. Merge only when
        # the action reads the same as well.
        best, best_score = None, self.dedup_threshold
        for entry in self.kca_store.entries(include_inactive=False):
            if token_overlap(entry.action_template, action_template) < 0.85:
                continue
            score = entry.condition_embedding.cosine(cond_emb)
            if score >= best_score:
                best, best_score = entry, score
        return best
