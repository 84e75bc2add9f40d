"""Provider facade: the single boundary for completions and embeddings.

Every other module calls through a Gateway instance. In mock mode the
whole thing is pure; in external mode responses are cached on disk so a
replay over the same trace stays byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading

from ..errors import ProviderUnavailable, SchemaViolation
from ..util import ts_to_iso
from .mock import MockProvider
from .types import CompletionRequest, EmbeddingVector, ProviderConfig, require_texts


class PromptLog:
    """Per-incident, append-only record of every prompt/response pair."""

    def __init__(self, log_dir: str):
        self.log_dir = log_dir
        self._seq: dict[str, int] = {}
        self._lock = threading.Lock()
        os.makedirs(log_dir, exist_ok=True)

    def append(self, incident_id: str, ts_ms: int, req: CompletionRequest, response: str):
        with self._lock:
            seq = self._seq.get(incident_id, 0) + 1
            self._seq[incident_id] = seq
            record = {
                "seq": seq,
                "timestamp": ts_to_iso(ts_ms),
                "schema_hint": req.schema_hint,
                "sections": [[n, b] for n, b in req.prompt_sections],
                "response": response,
            }
            path = os.path.join(self.log_dir, f"{incident_id}.promptlog.jsonl")
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


class ExternalProvider:
    """HTTP provider. Credentials come from OUTAGEKIT_PROVIDER_TOKEN only."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg

    def _post(self, path: str, body: dict) -> dict:
        import httpx

        headers = {}
        token = os.environ.get("OUTAGEKIT_PROVIDER_TOKEN")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = httpx.post(
                self.cfg.endpoint.rstrip("/") + path,
                json=body,
                headers=headers,
                timeout=60,
            )
            resp.raise_for_status()
            return resp.json()
        except Exception as exc:  # noqa: BLE001 - normalize transport failures
            raise ProviderUnavailable(str(exc)) from exc

    def complete(self, req: CompletionRequest) -> str:
        body = {
            "model": self.cfg.model_name,
            "sections": [[n, b] for n, b in req.prompt_sections],
            "schema_hint": req.schema_hint,
            "temperature": req.temperature,
            "max_output_tokens": req.max_output_tokens,
        }
        for attempt in range(2):
            data = self._post("/complete", body)
            text = data.get("text", "")
            if not req.schema_hint or _parses(req.schema_hint, text):
                if not text:
                    raise SchemaViolation("empty completion")
                return text
        raise SchemaViolation(
            f"output failed to parse against schema {req.schema_hint!r} after retry"
        )

    def embed(self, texts) -> list[EmbeddingVector]:
        data = self._post(
            "/embed", {"model": self.cfg.model_name, "texts": require_texts(texts)}
        )
        vectors = data.get("vectors", [])
        if len(vectors) != len(texts):
            raise SchemaViolation("embedding count mismatch")
        out = []
        for vec in vectors:
            if len(vec) != self.cfg.embedding_dim:
                raise SchemaViolation("embedding dim mismatch")
            out.append(EmbeddingVector(values=tuple(float(v) for v in vec),
                                       provider_id="external"))
        return out


def _parses(schema_hint: str, text: str) -> bool:
    structured = {"recommendation", "kca_list", "action_list", "match_verdict"}
    if schema_hint not in structured:
        return bool(text.strip())
    try:
        json.loads(text)
        return True
    except (json.JSONDecodeError, ValueError):
        return False


class Gateway:
    def __init__(self, cfg: ProviderConfig, prompt_log: PromptLog | None = None):
        self.cfg = cfg
        self.prompt_log = prompt_log
        if cfg.provider_id == "mock":
            self._provider = MockProvider(cfg)
        else:
            self._provider = ExternalProvider(cfg)
        self._cache_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- caching -------------------------------------------------------

    def _cache_key(self, kind: str, payload) -> str:
        blob = json.dumps([kind, payload], sort_keys=True)
        return hashlib.blake2b(blob.encode(), digest_size=16).hexdigest()

    def _cache_lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._cache_locks.setdefault(key, threading.Lock())

    def _cached(self, key: str):
        if not self.cfg.cache_dir:
            return None
        path = os.path.join(self.cfg.cache_dir, key + ".json")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        return None

    def _store(self, key: str, value):
        if not self.cfg.cache_dir:
            return
        os.makedirs(self.cfg.cache_dir, exist_ok=True)
        path = os.path.join(self.cfg.cache_dir, key + ".json")
        with self._cache_lock(key):
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(value, fh, sort_keys=True)
            os.replace(tmp, path)

    # -- public surface --------------------------------------------------

    def complete(self, req: CompletionRequest, incident_id: str | None = None,
                 ts_ms: int = 0) -> str:
        key = self._cache_key(
            "complete",
            [list(req.prompt_sections), req.schema_hint, req.temperature,
             self.cfg.seed if self.cfg.provider_id == "mock" else self.cfg.model_name],
        )
        cached = self._cached(key)
        if cached is not None:
            text = cached
        else:
            text = self._provider.complete(req)
            self._store(key, text)
        if self.prompt_log and incident_id:
            self.prompt_log.append(incident_id, ts_ms, req, text)
        return text

    def embed(self, texts) -> list[EmbeddingVector]:
        return self._provider.embed(list(texts))

    def embed_one(self, text: str) -> EmbeddingVector:
        return self.embed([text])[0]


def make_gateway(provider_cfg: ProviderConfig | None = None,
                 prompt_log_dir: str | None = None) -> Gateway:
    cfg = provider_cfg or ProviderConfig()
    log = PromptLog(prompt_log_dir) if prompt_log_dir else None
    return Gateway(cfg, log)
