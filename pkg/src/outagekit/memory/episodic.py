"""Case library of closed outages, retrieved by precondition similarity."""

from __future__ import annotations

import json
import os
import threading

import numpy as np

from ..gateway import Gateway
from ..perception.rules import SEVERITY_RANK
from .types import EpisodicCase


class EpisodicStore:
    def __init__(self, gateway: Gateway):
        self.gateway = gateway
        self._cases: dict[str, EpisodicCase] = {}
        self._order: list[str] = []
        self._lock = threading.RLock()

    def __len__(self):
        return len(self._cases)

    def __contains__(self, case_id: str):
        return case_id in self._cases

    def cases(self) -> list[EpisodicCase]:
        with self._lock:
            return [self._cases[i] for i in self._order]

    def add(self, case: EpisodicCase) -> str:
        with self._lock:
            if case.case_embedding is None:
                case.case_embedding = self.gateway.embed_one(
                    case.precondition_text() or case.incident_meta.get("title", "case")
                )
            if case.case_id not in self._cases:
                self._order.append(case.case_id)
            self._cases[case.case_id] = case
        return case.case_id

    def retrieve(self, precondition_text: str, m: int = 3,
                 filters: dict | None = None) -> list[tuple[EpisodicCase, float]]:
        if m < 1:
            raise ValueError("m must be >= 1")
        with self._lock:
            candidates = [self._cases[i] for i in self._order]
        filters = filters or {}
        if filters.get("service"):
            candidates = [
                c for c in candidates
                if c.incident_meta.get("service") == filters["service"]
            ]
        if filters.get("severity"):
            candidates = [
                c for c in candidates
                if SEVERITY_RANK.get(c.incident_meta.get("severity", "unknown"), 0)
                >= SEVERITY_RANK.get(filters["severity"], 0)
            ]
        if not candidates:
            return []
        q = np.array(self.gateway.embed_one(precondition_text).values)
        matrix = np.array([c.case_embedding.values for c in candidates])
        scores = matrix @ q
        scored = list(zip(candidates, (float(s) for s in scores)))
        scored.sort(key=lambda pair: (-pair[1], pair[0].case_id))
        return scored[:m]

    # ------------------------------------------------------------------

    def save(self, path: str):
        with self._lock, open(path, "w", encoding="utf-8") as fh:
            for case_id in self._order:
                fh.write(json.dumps(self._cases[case_id].to_dict(),
                                    sort_keys=True) + "\n")

    def load(self, path: str):
        if not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh, self._lock:
            for line in fh:
                if not line.strip():
                    continue
                case = EpisodicCase.from_dict(json.loads(line),
                                              self.gateway.cfg.provider_id)
                if case.case_id not in self._cases:
                    self._order.append(case.case_id)
                self._cases[case.case_id] = case
