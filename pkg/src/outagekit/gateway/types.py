"""Request/response types for the completion and embedding boundary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import EmptyText, SchemaViolation

# Canonical prompt section names. Every policy prompt is assembled from
# these headings so the prompt log stays auditable.
SECTION_SYSTEM = "System"
SECTION_SITUATION = "Situation"
SECTION_RECENT = "Recent Observations"
SECTION_KNOWLEDGE = "Relevant Knowledge"
SECTION_EPISODES = "Similar Past Outages"
SECTION_TASK = "Task"


@dataclass(frozen=True)
class CompletionRequest:
    prompt_sections: tuple[tuple[str, str], ...]
    max_output_tokens: int = 1024
    temperature: float = 0.0
    schema_hint: str | None = None

    def __post_init__(self):
        if not self.prompt_sections:
            raise SchemaViolation("prompt_sections must be non-empty")
        names = [name for name, _ in self.prompt_sections]
        if len(set(names)) != len(names):
            raise SchemaViolation(f"duplicate section names: {names}")
        if self.max_output_tokens <= 0:
            raise SchemaViolation("max_output_tokens must be positive")
        if self.temperature < 0:
            raise SchemaViolation("temperature must be non-negative")

    def section(self, name: str) -> str | None:
        for sec, body in self.prompt_sections:
            if sec == name:
                return body
        return None


def make_request(sections, schema_hint=None, temperature=0.0, max_output_tokens=1024):
    return CompletionRequest(
        prompt_sections=tuple((str(n), str(b)) for n, b in sections),
        schema_hint=schema_hint,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
    )


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    provider_id: str

    @property
    def dim(self) -> int:
        return len(self.values)

    def cosine(self, other: "EmbeddingVector") -> float:
        if other.dim != self.dim:
            raise ValueError(f"dim mismatch: {self.dim} vs {other.dim}")
        dot = sum(a * b for a, b in zip(self.values, other.values))
        na = math.sqrt(sum(a * a for a in self.values))
        nb = math.sqrt(sum(b * b for b in other.values))
        if na == 0 or nb == 0:
            return 0.0
        return dot / (na * nb)


@dataclass
class ProviderConfig:
    provider_id: str = "mock"
    endpoint: str | None = None
    model_name: str | None = None
    embedding_dim: int = 256
    cache_dir: str | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provider_id == "external":
            if not self.endpoint or not self.model_name:
                raise ValueError("external provider requires endpoint and model_name")
        elif self.provider_id == "mock":
            if self.seed is None:
                raise ValueError("mock provider requires a seed")
        else:
            raise ValueError(f"unknown provider_id {self.provider_id!r}")
        if self.embedding_dim <= 0:
            raise ValueError("embedding_dim must be positive")


def require_texts(texts) -> list[str]:
    if not texts:
        raise EmptyText("no texts to embed")
    cleaned = []
    for t in texts:
        if not str(t).strip():
            raise EmptyText("cannot embed empty text")
        cleaned.append(str(t))
    return cleaned
