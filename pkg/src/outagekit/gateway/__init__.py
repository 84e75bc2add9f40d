from .core import Gateway, PromptLog, make_gateway
from .mock import MockProvider
from .types import (
    SECTION_EPISODES,
    SECTION_KNOWLEDGE,
    SECTION_RECENT,
    SECTION_SITUATION,
    SECTION_SYSTEM,
    SECTION_TASK,
    CompletionRequest,
    EmbeddingVector,
    ProviderConfig,
    make_request,
)

__all__ = [
    "Gateway",
    "PromptLog",
    "make_gateway",
    "MockProvider",
    "CompletionRequest",
    "EmbeddingVector",
    "ProviderConfig",
    "make_request",
    "SECTION_SYSTEM",
    "SECTION_SITUATION",
    "SECTION_RECENT",
    "SECTION_KNOWLEDGE",
    "SECTION_EPISODES",
    "SECTION_TASK",
]
