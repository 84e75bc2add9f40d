from .engine import ReasoningEngine
from .types import Abstain, FeedbackRecord, Precondition, Recommendation, RetrievalBundle

__all__ = [
    "ReasoningEngine",
    "Precondition",
    "Recommendation",
    "Abstain",
    "FeedbackRecord",
    "RetrievalBundle",
]
