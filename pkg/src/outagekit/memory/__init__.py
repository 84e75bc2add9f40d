from .consolidate import Consolidator, PlaybookDoc
from .episodic import EpisodicStore
from .kca_store import KcaStore
from .types import (
    AttemptedAction,
    CaseAction,
    EpisodicCase,
    KcaEntry,
    KcaKey,
    KcaStats,
    WorkingMemoryState,
)
from .working import WorkingMemory

__all__ = [
    "KcaStore",
    "EpisodicStore",
    "WorkingMemory",
    "Consolidator",
    "PlaybookDoc",
    "KcaEntry",
    "KcaKey",
    "KcaStats",
    "EpisodicCase",
    "CaseAction",
    "AttemptedAction",
    "WorkingMemoryState",
]
