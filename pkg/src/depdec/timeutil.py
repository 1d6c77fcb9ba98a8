"""UTC timestamp parsing. Local or naive times are rejected."""

from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone

_DATE_ONLY = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp that is explicitly UTC.

    Accepts a trailing ``Z`` or a zero offset. A bare date is read as
    midnight UTC. Anything carrying a non-zero offset or no zone at all
    raises ``ValueError``.
    """
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    s = text.strip()
    if _DATE_ONLY.match(s):
        return datetime.fromisoformat(s).replace(tzinfo=timezone.utc)
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        value = datetime.fromisoformat(s)
    except ValueError:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}") from None
    if value.tzinfo is None:
        raise ValueError(f"timestamp has no UTC designator: {text!r}")
    if value.utcoffset() != timedelta(0):
        raise ValueError(f"timestamp is not UTC: {text!r}")
    return value.astimezone(timezone.utc)


def format_utc(value: datetime) -> str:
    value = value.astimezone(timezone.utc)
    spec = "microseconds" if value.microsecond else "seconds"
    return value.replace(tzinfo=None).isoformat(timespec=spec) + "Z"
