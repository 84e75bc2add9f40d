"""Deterministic offline provider.

Completions are pure functions of (prompt sections, seed, schema hint);
embeddings are a seeded feature-hashing projection. This is what makes
full-trace replay byte-reproducible with zero network calls.

The structured schemas the mock knows how to fill:

  precondition     — situation statement from event summaries + stage
  recommendation   — picks the best candidate from the knowledge/episode
                     sections by token overlap with the Situation
  kca_list         — distills (key, condition, action) triples from a
                     playbook document or from a closed-case section pair
  action_list      — extracts executed-action utterances from a transcript
  context_summary  — rolling window summary
  event_summary    — one-line summary of a promoted state change
  match_verdict    — yes/no semantic match judgment
"""

from __future__ import annotations

import hashlib
import json
import math
import re

from ..stages import tag_phase
from ..util import token_overlap, tokens
from .types import (
    SECTION_EPISODES,
    SECTION_KNOWLEDGE,
    SECTION_SITUATION,
    CompletionRequest,
    EmbeddingVector,
    ProviderConfig,
    require_texts,
)

# Verbs that mark an utterance as a performed (or in-flight) operator
# action rather than a status observation.
ACTION_UTTERANCE_RE = re.compile(
    r"\b(initiated|initiating|executed|executing|applied|applying|restarted|"
    r"restarting|failed over|failing over|rolled back|rolling back|scaled|"
    r"drained|draining|promoted|redirected|deployed|reverted|escalated|"
    r"disabled|enabled|throttled|provisioned)\b",
    re.IGNORECASE,
)

# Imperative verbs that mark a playbook line as an action step.
PLAYBOOK_ACTION_RE = re.compile(
    r"\b(verify|initiate|execute|run|restart|fail over|failover|escalate|"
    r"apply|drain|roll back|rollback|restore|recover|validate|confirm|"
    r"power|promote|scale|redirect|throttle|provision|page)\b",
    re.IGNORECASE,
)

_CONDITION_CUE_RE = re.compile(r"\b(when|if|after|before|once|while)\b", re.IGNORECASE)
_SLOT_RE = re.compile(r"\{(\w+)\}")
_KCA_LINE_RE = re.compile(r"^- \[kca:([^\]]+)\] if (.*?) then (.*)$")
_CASE_LINE_RE = re.compile(r"^- \[case:([^\]]+)\] (.*?) => (.*)$")

COMMUNICATION_SOURCES = {"chat", "bridge_transcript", "operator_note", "status_update"}


class MockProvider:
    """Offline provider: deterministic completions + hashed embeddings."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self._seed_key = hashlib.blake2b(
            str(cfg.seed).encode(), digest_size=16
        ).digest()

    # ------------------------------------------------------------------
    # embeddings
    # ------------------------------------------------------------------

    def embed(self, texts) -> list[EmbeddingVector]:
        return [self._embed_one(t) for t in require_texts(texts)]

    def _embed_one(self, text: str) -> EmbeddingVector:
        dim = self.cfg.embedding_dim
        vec = [0.0] * dim
        toks = tokens(text)
        if not toks:
            # punctuation-only text still gets a deterministic direction
            toks = ["_blank_"]
        for tok in toks:
            # 5-char prefix stem: ties inflections (initiate/initiated,
            # stage/staged) to one feature so paraphrases stay close
            stem = tok[:5]
            h = hashlib.blake2b(stem.encode(), key=self._seed_key, digest_size=8).digest()
            idx = int.from_bytes(h[:4], "big") % dim
            sign = 1.0 if h[4] & 1 else -1.0
            vec[idx] += sign
        norm = math.sqrt(sum(v * v for v in vec))
        if norm == 0:
            vec[0] = 1.0
            norm = 1.0
        return EmbeddingVector(
            values=tuple(v / norm for v in vec), provider_id="mock"
        )

    # ------------------------------------------------------------------
    # completions
    # ------------------------------------------------------------------

    def complete(self, req: CompletionRequest) -> str:
        handler = {
            "precondition": self._precondition,
            "recommendation": self._recommendation,
            "kca_list": self._kca_list,
            "action_list": self._action_list,
            "context_summary": self._context_summary,
            "event_summary": self._event_summary,
            "match_verdict": self._match_verdict,
        }.get(req.schema_hint or "", self._generic)
        return handler(req)

    def _generic(self, req: CompletionRequest) -> str:
        blob = json.dumps(req.prompt_sections, sort_keys=True)
        digest = hashlib.blake2b(
            blob.encode(), key=self._seed_key, digest_size=6
        ).hexdigest()
        return f"mock-completion:{digest}"

    def _context_summary(self, req: CompletionRequest) -> str:
        phase = (req.section("Phase") or "Detect").strip()
        severity = (req.section("Severity") or "unknown").strip()
        prev = (req.section("Previous Summary") or "").strip()
        obs_lines = [
            ln.strip() for ln in (req.section("Observations") or "").splitlines()
            if ln.strip()
        ]
        if not obs_lines:
            return prev or f"{phase} {severity}: no new observations"
        snippets = []
        seen = set()
        for ln in obs_lines[-6:]:
            snip = ln[:90]
            if snip not in seen:
                seen.add(snip)
                snippets.append(snip)
        return f"{phase} {severity}: " + "; ".join(snippets)[:360]

    def _event_summary(self, req: CompletionRequest) -> str:
        kind = (req.section("Kind") or "other").strip()
        change = (req.section("Change") or "").strip()
        evidence = [
            ln.strip() for ln in (req.section("Evidence") or "").splitlines()
            if ln.strip()
        ]
        head = f"{kind}: {change}" if change else kind
        if evidence:
            head += f" | {evidence[0][:140]}"
        return head[:400]

    def _precondition(self, req: CompletionRequest) -> str:
        stage = (req.section("Stage") or "Detect").strip()
        service = (req.section("Service") or "").strip()
        events = [
            ln.strip() for ln in (req.section("Events") or "").splitlines()
            if ln.strip()
        ]
        context = (req.section("Context") or "").strip()
        scope = f" for {service}" if service else ""
        body = "; ".join(events) if events else "no salient events"
        text = f"Stage {stage}{scope}: {body}"
        if context:
            text += f" | context: {context[:140]}"
        return text[:600]

    def _recommendation(self, req: CompletionRequest) -> str:
        situation = req.section(SECTION_SITUATION) or ""
        candidates = []  # (score, order, source, action)
        order = 0
        for ln in (req.section(SECTION_KNOWLEDGE) or "").splitlines():
            m = _KCA_LINE_RE.match(ln.strip())
            if m:
                kca_id, condition, action = m.groups()
                candidates.append(
                    (token_overlap(condition, situation), order, f"kca:{kca_id}", action)
                )
                order += 1
        for ln in (req.section(SECTION_EPISODES) or "").splitlines():
            m = _CASE_LINE_RE.match(ln.strip())
            if m:
                case_id, precond, action = m.groups()
                candidates.append(
                    (token_overlap(precond, situation), order, f"case:{case_id}", action)
                )
                order += 1
        if not candidates:
            return json.dumps(
                {
                    "insufficient": True,
                    "missing": "no relevant knowledge or similar cases retrieved",
                },
                sort_keys=True,
            )
        best = max(candidates, key=lambda c: (c[0], -c[1]))
        score, _, source, action = best
        if score < 0.15:
            return json.dumps(
                {
                    "insufficient": True,
                    "missing": "retrieved context does not cover the current situation",
                },
                sort_keys=True,
            )
        confidence = round(min(0.95, 0.35 + 0.6 * score), 2)
        return json.dumps(
            {
                "action": action,
                "source": source,
                "confidence": confidence,
                "rationale": f"condition overlap {score:.2f} with current situation",
            },
            sort_keys=True,
        )

    def _action_list(self, req: CompletionRequest) -> str:
        out = []
        for ln in (req.section("Transcript") or "").splitlines():
            parts = [p.strip() for p in ln.split("|", 2)]
            if len(parts) != 3:
                continue
            ts, source, payload = parts
            if source not in COMMUNICATION_SOURCES:
                continue
            if not ACTION_UTTERANCE_RE.search(payload):
                continue
            out.append(
                {
                    "ts": ts,
                    "action_text": payload,
                    "stage": tag_phase(payload) or "Investigate",
                }
            )
        return json.dumps(out, sort_keys=True)

    def _kca_list(self, req: CompletionRequest) -> str:
        if req.section("Document") is not None:
            return json.dumps(self._distill_document(req), sort_keys=True)
        return json.dumps(self._distill_case(req), sort_keys=True)

    def _distill_document(self, req: CompletionRequest) -> list[dict]:
        body = req.section("Document") or ""
        title = (req.section("Title") or "runbook").strip()
        service = (req.section("Service") or "general").strip()
        triples = []
        stage = "Mitigate"
        condition = title
        for raw in body.splitlines():
            line = raw.strip()
            if not line:
                continue
            heading = line.startswith("#")
            text = line.lstrip("#-*0123456789. ").strip()
            if not text:
                continue
            line_stage = tag_phase(text)
            if heading:
                if line_stage:
                    stage = line_stage
                condition = text
                continue
            is_step = bool(re.match(r"^[-*]|\d+\.", line))
            if is_step and PLAYBOOK_ACTION_RE.search(text):
                triples.append(
                    {
                        "key": {
                            "stage": line_stage or stage,
                            "service_domain": service,
                            "scope": title,
                        },
                        "condition": condition,
                        "action_template": text,
                        "slots": sorted(set(_SLOT_RE.findall(text))),
                    }
                )
            elif _CONDITION_CUE_RE.search(text):
                condition = text
                if line_stage:
                    stage = line_stage
        return triples

    def _distill_case(self, req: CompletionRequest) -> list[dict]:
        precond_lines = []
        for ln in (req.section("Case Preconditions") or "").splitlines():
            parts = [p.strip() for p in ln.split("|", 2)]
            if len(parts) == 3:
                precond_lines.append(parts)  # (ts, stage, text)
        service = (req.section("Service") or "general").strip()
        title = (req.section("Title") or "case").strip()
        triples = []
        for ln in (req.section("Successful Actions") or "").splitlines():
            parts = [p.strip() for p in ln.split("|", 1)]
            if len(parts) != 2:
                continue
            ts, action = parts
            stage, condition = "Investigate", title
            for p_ts, p_stage, p_text in precond_lines:
                if p_ts <= ts:
                    stage, condition = p_stage, p_text
            template = action
            if service and service != "general":
                template = re.sub(re.escape(service), "{service}", template, flags=re.IGNORECASE)
            triples.append(
                {
                    "key": {"stage": stage, "service_domain": service, "scope": title},
                    "condition": condition,
                    "action_template": template,
                    "slots": sorted(set(_SLOT_RE.findall(template))),
                }
            )
        return triples

    def _match_verdict(self, req: CompletionRequest) -> str:
        a = req.section("Candidate") or ""
        b = req.section("Reference") or ""
        return json.dumps({"match": token_overlap(a, b) >= 0.5}, sort_keys=True)
