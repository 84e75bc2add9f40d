from .pipeline import Perceptor
from .topology import Topology
from .types import (
    ContextState,
    CriticalEvent,
    Duplicate,
    EntityRef,
    Observation,
    RawSignal,
    StateDelta,
    Tags,
)

__all__ = [
    "Perceptor",
    "Topology",
    "RawSignal",
    "Observation",
    "Duplicate",
    "EntityRef",
    "ContextState",
    "CriticalEvent",
    "StateDelta",
    "Tags",
]
