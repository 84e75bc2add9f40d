"""Ground-truth action sets for replay scoring.

G1 is everything a model extracts from the communication transcript,
reconciled with the curated annotations shipped inside a trace (and an
optional external label file). A curated label always wins over the raw
extracted utterance at the same timestamp. G2 keeps only the actions
that resemble something a playbook already prescribes, which is the
subset a knowledge-driven recommender can reasonably be expected to hit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..gateway import Gateway, make_request
from ..memory import KcaStore
from ..util import parse_ts, ts_to_iso
from .corpus import Trace


@dataclass
class GroundTruthAction:
    ts: int
    action_text: str
    stage: str
    confirmed: bool = False
    source_quote: str = ""
    playbook_ref: str | None = None
    match_score: float = 0.0

    def to_dict(self):
        return dict(self.__dict__)


def extract_actions(trace: Trace, gateway: Gateway) -> list[GroundTruthAction]:
    """Model pass over the transcript: every communication-channel line
    that reads like a performed operator action."""
    lines = [
        f"{ts_to_iso(sig.ts)} | {sig.source} | {sig.payload}"
        for sig in trace.signals
        if sig.modality == "communication"
    ]
    req = make_request([("Transcript", "\n".join(lines))], schema_hint="action_list")
    raw = json.loads(gateway.complete(req, incident_id=trace.trace_id))
    out = []
    for item in raw:
        out.append(GroundTruthAction(
            ts=parse_ts(item["ts"]),
            action_text=item["action_text"],
            stage=item["stage"],
            confirmed=False,
            source_quote=item["action_text"],
        ))
    out.sort(key=lambda a: (a.ts, a.action_text))
    return out


def _load_label_file(path: str) -> list[dict]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                labels.append(json.loads(line))
    return labels


def build_ground_truth(trace: Trace, gateway: Gateway,
                       label_file: str | None = None) -> list[GroundTruthAction]:
    """G1: model-extracted actions merged with curated labels.

    Labels are matched to extracted actions by timestamp; on a match the
    label text and stage replace the extracted ones and the entry is
    marked confirmed. Labels with no extracted counterpart are added as
    confirmed entries of their own.
    """
    actions = extract_actions(trace, gateway)
    by_ts = {a.ts: a for a in actions}

    curated = [a.to_dict() for a in trace.annotations]
    if label_file:
        curated.extend(_load_label_file(label_file))

    for label in curated:
        ts = parse_ts(label["ts"])
        hit = by_ts.get(ts)
        if hit is not None:
            hit.action_text = label["action_text"]
            hit.stage = label.get("stage", hit.stage)
            hit.confirmed = True
            if label.get("source_quote"):
                hit.source_quote = label["source_quote"]
        else:
            entry = GroundTruthAction(
                ts=ts,
                action_text=label["action_text"],
                stage=label.get("stage", "Investigate"),
                confirmed=True,
                source_quote=label.get("source_quote", label["action_text"]),
            )
            actions.append(entry)
            by_ts[ts] = entry
    actions.sort(key=lambda a: (a.ts, a.action_text))
    return actions


def filter_to_playbook_actions(actions: list[GroundTruthAction],
                               kca_store: KcaStore, gateway: Gateway,
                               threshold: float = 0.8) -> list[GroundTruthAction]:
    """G2: the subset of G1 whose action text is close to some playbook
    entry's action template."""
    templates = [
        (e.kca_id, e.action_template)
        for e in kca_store.entries(include_inactive=False)
        if e.provenance == "playbook"
    ]
    if not templates:
        return []
    template_embs = [gateway.embed_one(t) for _, t in templates]
    kept = []
    for action in actions:
        emb = gateway.embed_one(action.action_text)
        best_id, best = None, 0.0
        for (kca_id, _), temb in zip(templates, template_embs):
            score = emb.cosine(temb)
            if score > best:
                best_id, best = kca_id, score
        if best >= threshold:
            clone = GroundTruthAction(**action.to_dict())
            clone.playbook_ref = best_id
            clone.match_score = round(best, 4)
            kept.append(clone)
    return kept
