"""Small shared helpers: timestamps, tokenization, stable ids."""

from __future__ import annotations

import hashlib
import re
from datetime import datetime, timezone

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def parse_ts(value) -> int:
    """Parse a timestamp into epoch milliseconds (UTC).

    Accepts epoch ms (int), epoch seconds (float), or ISO-8601 text.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a timestamp: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return int(round(value * 1000))
    if isinstance(value, str):
        text = value.strip()
        if re.fullmatch(r"\d{12,}", text):
            return int(text)
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp() * 1000)
    raise ValueError(f"not a timestamp: {value!r}")


def ts_to_iso(ts_ms: int) -> str:
    dt = datetime.fromtimestamp(ts_ms / 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts_ms % 1000:03d}Z"


def tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def token_overlap(a: str, b: str) -> float:
    """Overlap coefficient of the token sets of two texts, in [0, 1]."""
    ta, tb = set(tokens(a)), set(tokens(b))
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / min(len(ta), len(tb))


def stable_id(prefix: str, *parts: str) -> str:
    h = hashlib.blake2b("\x1f".join(parts).encode("utf-8"), digest_size=8)
    return f"{prefix}-{h.hexdigest()}"


def clip01(x: float) -> float:
    return max(0.0, min(1.0, x))
