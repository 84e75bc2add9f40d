"""Long-term key/condition/action store with dual-embedding retrieval.

Retrieval is exact full-scan cosine over numpy matrices. Store sizes here
are thousands of entries, so an approximate index would only cost us the
oracle-equivalence guarantee.
"""

from __future__ import annotations

import json
import os
import threading

import numpy as np

from ..errors import DimMismatch, NotFound
from ..gateway import Gateway
from .types import KcaEntry, KcaKey

STORE_FORMAT_VERSION = 1


class KcaStore:
    def __init__(self, gateway: Gateway, audit_log_path: str | None = None):
        self.gateway = gateway
        self.audit_log_path = audit_log_path
        self._entries: dict[str, KcaEntry] = {}
        self._order: list[str] = []  # insertion order, for stable matrices
        self._key_matrix: np.ndarray | None = None
        self._cond_matrix: np.ndarray | None = None
        self._dirty = True
        self._lock = threading.RLock()
        self.audit_records: list[dict] = []

    # ------------------------------------------------------------------

    def __len__(self):
        return len(self._entries)

    def get(self, kca_id: str) -> KcaEntry:
        entry = self._entries.get(kca_id)
        if entry is None:
            raise NotFound(f"no KCA entry {kca_id!r}")
        return entry

    def entries(self, include_inactive: bool = True) -> list[KcaEntry]:
        with self._lock:
            out = [self._entries[i] for i in self._order]
        if not include_inactive:
            out = [e for e in out if e.active]
        return out

    @property
    def dim(self) -> int:
        return self.gateway.cfg.embedding_dim

    # ------------------------------------------------------------------

    def upsert(self, entry: KcaEntry, now_ms: int = 0) -> str:
        entry.validate_slots()
        with self._lock:
            if entry.key_embedding is None:
                entry.key_embedding = self.gateway.embed_one(entry.key.text())
            if entry.condition_embedding is None:
                entry.condition_embedding = self.gateway.embed_one(entry.condition)
            for emb in (entry.key_embedding, entry.condition_embedding):
                if emb.dim != self.dim:
                    raise DimMismatch(
                        f"embedding dim {emb.dim} != store dim {self.dim}"
                    )
            if entry.created_at == 0:
                entry.created_at = now_ms
            entry.updated_at = now_ms
            if entry.kca_id not in self._entries:
                self._order.append(entry.kca_id)
            self._entries[entry.kca_id] = entry
            self._dirty = True
        return entry.kca_id

    def _rebuild(self):
        if not self._dirty:
            return
        if self._order:
            self._key_matrix = np.array(
                [self._entries[i].key_embedding.values for i in self._order]
            )
            self._cond_matrix = np.array(
                [self._entries[i].condition_embedding.values for i in self._order]
            )
        else:
            self._key_matrix = self._cond_matrix = None
        self._dirty = False

    def retrieve(self, key_text: str | None = None,
                 condition_text: str | None = None,
                 k: int = 5) -> list[tuple[KcaEntry, float]]:
        """Rank active entries by cosine similarity.

        With both query fields present, candidates are the union of the
        top-2k by key similarity and top-2k by condition similarity, and
        the final score is the equal-weight mean of both cosines. Ties
        break by kca_id ascending so replay ordering is deterministic.
        """
        if key_text is None and condition_text is None:
            raise ValueError("at least one of key_text/condition_text required")
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock:
            self._rebuild()
            if not self._order:
                return []
            key_matrix, cond_matrix = self._key_matrix, self._cond_matrix
            order = list(self._order)

        key_scores = cond_scores = None
        if key_text is not None:
            q = np.array(self.gateway.embed_one(key_text).values)
            key_scores = key_matrix @ q
        if condition_text is not None:
            q = np.array(self.gateway.embed_one(condition_text).values)
            cond_scores = cond_matrix @ q

        if key_scores is not None and cond_scores is not None:
            kw = 0.5
            candidate_idx = set(
                np.argsort(-key_scores, kind="stable")[: 2 * k].tolist()
            ) | set(np.argsort(-cond_scores, kind="stable")[: 2 * k].tolist())
            scores = {
                i: kw * float(key_scores[i]) + (1 - kw) * float(cond_scores[i])
                for i in candidate_idx
            }
        else:
            vec = key_scores if key_scores is not None else cond_scores
            scores = {i: float(vec[i]) for i in range(len(order))}

        scored = [
            (self._entries[order[i]], s)
            for i, s in scores.items()
            if self._entries[order[i]].active
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0].kca_id))
        hits = scored[:k]
        for entry, _ in hits:
            entry.stats.times_retrieved += 1
        return hits

    # ------------------------------------------------------------------
    # expert review

    def _audit(self, op: str, actor: str, before, after, now_ms: int):
        record = {
            "op": op,
            "actor": actor,
            "at": now_ms,
            "before": before,
            "after": after,
        }
        self.audit_records.append(record)
        if self.audit_log_path:
            with open(self.audit_log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def expert_review(self, op: str, payload: dict, actor: str = "expert",
                      now_ms: int = 0):
        if op == "list":
            return [e.to_dict() for e in self.entries()]
        if op == "author":
            entry = KcaEntry(
                kca_id=payload["kca_id"],
                key=KcaKey.from_dict(payload["key"]),
                condition=payload["condition"],
                action_template=payload["action_template"],
                slots=list(payload.get("slots", [])),
                provenance="expert",
                source_ref=payload.get("source_ref", actor),
            )
            self.upsert(entry, now_ms=now_ms)
            self._audit("author", actor, None, entry.to_dict(), now_ms)
            return entry.kca_id
        if op == "edit":
            entry = self.get(payload["kca_id"])
            before = entry.to_dict()
            if "condition" in payload:
                entry.condition = payload["condition"]
                entry.condition_embedding = self.gateway.embed_one(entry.condition)
            if "key" in payload:
                entry.key = KcaKey.from_dict(payload["key"])
                entry.key_embedding = self.gateway.embed_one(entry.key.text())
            if "action_template" in payload:
                entry.action_template = payload["action_template"]
                entry.slots = list(payload.get("slots", entry.slots))
                entry.validate_slots()
            entry.updated_at = now_ms
            with self._lock:
                self._dirty = True
            self._audit("edit", actor, before, entry.to_dict(), now_ms)
            return entry.kca_id
        if op == "deactivate":
            entry = self.get(payload["kca_id"])
            before = entry.to_dict()
            entry.active = False
            entry.updated_at = now_ms
            self._audit("deactivate", actor, before, entry.to_dict(), now_ms)
            return entry.kca_id
        raise ValueError(f"unknown expert op {op!r}")

    # ------------------------------------------------------------------
    # persistence: versioned header + one entry per line

    def save(self, path: str):
        with self._lock, open(path, "w", encoding="utf-8") as fh:
            header = {
                "format": STORE_FORMAT_VERSION,
                "embedding_dim": self.dim,
                "provider_id": self.gateway.cfg.provider_id,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for kca_id in self._order:
                fh.write(json.dumps(self._entries[kca_id].to_dict(),
                                    sort_keys=True) + "\n")

    def load(self, path: str):
        if not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("embedding_dim") != self.dim:
                raise DimMismatch(
                    f"store dim {header.get('embedding_dim')} != provider dim {self.dim}"
                )
            provider_id = header.get("provider_id", "mock")
            with self._lock:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = KcaEntry.from_dict(json.loads(line), provider_id)
                    if entry.kca_id not in self._entries:
                        self._order.append(entry.kca_id)
                    self._entries[entry.kca_id] = entry
                self._dirty = True
