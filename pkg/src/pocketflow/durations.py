"""Parsing and formatting of human-entered durations like "250ms" or "24h"."""

from __future__ import annotations

import re

_UNITS = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}

_DURATION_RE = re.compile(r"(?P<value>\d+(?:\.\d+)?)\s*(?P<unit>ms|s|m|h|d)?")


def parse_duration(text: str) -> float:
    """Duration string to seconds. A bare number means seconds."""
    match = _DURATION_RE.fullmatch(text.strip())
    if match is None:
        raise ValueError(f"bad duration {text!r} (use e.g. 250ms, 30s, 1.5m, 24h)")
    return float(match.group("value")) * _UNITS[match.group("unit") or "s"]


def format_duration(seconds: float) -> str:
    """Shortest round representation for display."""
    if seconds < 1:
        return f"{seconds * 1000:g}ms"
    for unit, scale in (("d", 86400.0), ("h", 3600.0), ("m", 60.0)):
        if seconds >= scale and seconds % scale == 0:
            return f"{seconds / scale:g}{unit}"
    return f"{seconds:g}s"
