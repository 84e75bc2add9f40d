"""Outage life-cycle stages and keyword-based stage tagging.

Shared by the perception rules and the offline text heuristics so both
sides agree on what counts as which stage.
"""

from __future__ import annotations

PHASES = ("Detect", "Assess", "Investigate", "Mitigate", "Resolve")

_PHASE_RANK = {p: i for i, p in enumerate(PHASES)}

# Keyword tables checked in reverse stage order so the most advanced
# stage mentioned wins.
PHASE_KEYWORDS: dict[str, tuple[str, ...]] = {
    "Detect": ("alert fired", "alert triggered", "detected", "paging", "monitor fired",
               "detect"),
    "Assess": ("impact", "assessing", "customers affected", "severity declared",
               "blast radius", "assess"),
    "Investigate": ("investigating", "root cause", "hypothesis", "diagnos", "suspect",
                    "investigate", "triage"),
    "Mitigate": ("mitigation", "failover", "applying fix", "rolling back", "restart",
                 "draining", "rollback", "mitigate"),
    "Resolve": ("resolved", "restored", "recovery", "stabilizing", "all clear",
                "power-up", "stabilized", "recovering", "back to normal",
                "healthy again", "resolve"),
}


def phase_rank(phase: str) -> int:
    return _PHASE_RANK.get(phase, -1)


def max_phase(a: str, b: str) -> str:
    return a if phase_rank(a) >= phase_rank(b) else b


def tag_phase(text: str) -> str | None:
    """Most advanced stage whose keywords appear in the text, or None."""
    lowered = text.lower()
    for phase in reversed(PHASES):
        if any(kw in lowered for kw in PHASE_KEYWORDS[phase]):
            return phase
    return None
