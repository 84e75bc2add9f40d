"""Pipeline configuration with file + environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import yaml

from .gateway.types import ProviderConfig

DEFAULT_DELTA_WEIGHTS = {
    "phase": 0.5,
    "severity": 0.5,
    "affected_entities_per_added": 0.3,
    "affected_entities_cap": 0.6,
    "mitigations_in_flight": 0.4,
    "open_hypotheses": 0.2,
}


@dataclass
class PipelineConfig:
    # perception
    window_length_s: int = 300
    promote_threshold: float = 0.3
    clock_skew_s: int = 300
    delta_weights: dict = field(default_factory=lambda: dict(DEFAULT_DELTA_WEIGHTS))
    source_allowlist: list = field(default_factory=list)  # empty = allow all

    # memory
    working_event_cap: int = 50
    working_note_cap: int = 50
    dedup_threshold: float = 0.92
    retrieval_key_weight: float = 0.5

    # reasoning
    top_k: int = 5
    top_m: int = 3
    max_rounds: int = 3
    min_confidence: float = 0.4
    suppress_threshold: float = 0.9
    match_threshold: float = 0.75
    recommendation_ttl_s: int = 3600

    # evaluation
    eval_window_s: int = 1800
    eval_threshold: float = 0.75
    eval_symmetric_window: bool = False
    eval_one_to_one: bool = True
    eval_exact_assignment: bool = False
    g2_threshold: float = 0.8

    provider: ProviderConfig = field(default_factory=ProviderConfig)

    def snapshot(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "provider":
                val = {
                    "provider_id": val.provider_id,
                    "model_name": val.model_name,
                    "embedding_dim": val.embedding_dim,
                    "seed": val.seed,
                }
            out[f.name] = val
        return out


_ENV_PREFIX = "OUTAGEKIT_"


def load_config(path: str | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional YAML file, env vars, then overrides."""
    data: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    provider_data = data.pop("provider", {})
    cfg = PipelineConfig(**data)
    if provider_data:
        cfg.provider = ProviderConfig(**provider_data)

    for f in fields(PipelineConfig):
        env = os.environ.get(_ENV_PREFIX + f.name.upper())
        if env is None or f.name in ("delta_weights", "provider", "source_allowlist"):
            continue
        cur = getattr(cfg, f.name)
        if isinstance(cur, bool):
            setattr(cfg, f.name, env.lower() in ("1", "true", "yes"))
        elif isinstance(cur, int):
            setattr(cfg, f.name, int(env))
        elif isinstance(cur, float):
            setattr(cfg, f.name, float(env))
        else:
            setattr(cfg, f.name, env)

    for key, val in (overrides or {}).items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, val)
    return cfg
