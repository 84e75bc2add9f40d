"""Severity canonicalization and keyword rule tables for classification.

Rule-first on purpose: the perception layer stays cheap and deterministic,
and a completion call is only ever a fallback, never the default path.
"""

from __future__ import annotations

import re

_SEV_RE = re.compile(r"\bsev[\s\-_]?([1-4])\b", re.IGNORECASE)


def canonical_severity(raw: str | None) -> str | None:
    """Map severity spellings (SEV-1, sev 2, s3, "1") to SEV1..SEV4."""
    if raw is None:
        return None
    text = raw.strip().lower()
    if not text:
        return None
    m = re.fullmatch(r"(?:sev|s)?[\s\-_]?([1-4])", text)
    if m:
        return f"SEV{m.group(1)}"
    m = _SEV_RE.search(text)
    if m:
        return f"SEV{m.group(1)}"
    return None


def severity_in_text(payload: str) -> str | None:
    m = _SEV_RE.search(payload)
    return f"SEV{m.group(1)}" if m else None


SEVERITY_RANK = {"SEV1": 4, "SEV2": 3, "SEV3": 2, "SEV4": 1, "unknown": 0}


def worse_severity(a: str, b: str) -> str:
    return a if SEVERITY_RANK.get(a, 0) >= SEVERITY_RANK.get(b, 0) else b


# Ordered (pattern, event_type). First hit wins.
_EVENT_TYPE_RULES: list[tuple[re.Pattern, str]] = [
    (re.compile(r"root cause.*(identified|confirmed)|confirmed.*root cause", re.I),
     "root_cause_identified"),
    (re.compile(r"\b(hypothesis|suspect(ing|ed)?|likely cause)\b", re.I), "hypothesis"),
    (re.compile(r"(mitigation|fix|patch).*(applied|in progress|progressing|working|"
                r"dropping|improving)", re.I), "mitigation_progress"),
    (re.compile(r"(mitigation|failover|rollback|roll back|restart|drain|recovery "
                r"sequence|redeploy).*(start|initiat|beginning|applying|launch|"
                r"kicked off)", re.I), "mitigation_start"),
    (re.compile(r"(initiat|start|launch|kick).*(mitigation|failover|rollback|"
                r"restart|drain|recovery sequence)", re.I), "mitigation_start"),
    (re.compile(r"(restored|recovered|recovery complete|stabiliz|back to normal|"
                r"all clear|healthy again)", re.I), "recovery"),
    (re.compile(r"(shut\s?down|is down|unreachable|fail(ure|ed|ing)|error rate|"
                r"latency|exhaust|degraded|crash|timeout|outage|not responding)",
     re.I), "fault_detected"),
]


def classify_event_type(payload: str) -> str:
    for pattern, event_type in _EVENT_TYPE_RULES:
        if pattern.search(payload):
            return event_type
    return "status_update"


# Event types that open / close a mitigation in the context state.
MITIGATION_OPENERS = {"mitigation_start"}
MITIGATION_CLOSERS = {"recovery"}
