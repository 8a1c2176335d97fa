"""Rebuild a mission summary from an event log.

The log is line-oriented: ``<iso time> | <category> | k=v k=v ...``. The
aggregator is tolerant: a malformed line becomes a warning entry and the
rest of the file still counts. Downlink totals come from grant events,
actual transmitted bytes from chunk events.
"""
from datetime import datetime

from .engine import CATEGORIES


def parse_line(line: str):
    parts = line.split(" | ", 2)
    if len(parts) != 3:
        raise ValueError("expected 'time | category | details'")
    time = datetime.fromisoformat(parts[0])
    category = parts[1]
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    details = {}
    for token in parts[2].split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ValueError(f"bad detail token {token!r}")
        details[key] = value
    return time, category, details


def summarize(lines) -> tuple:
    """(summary dict, warnings list) for an iterable of log lines."""
    counts = {c: 0 for c in CATEGORIES}
    warnings = []
    downlink = chunk_bytes = uplinked = 0
    first = last = None
    days = set()
    prev = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        try:
            time, category, details = parse_line(line)
        except ValueError as exc:
            warnings.append(f"line {lineno}: {exc}")
            continue
        counts[category] += 1
        if prev is not None and time < prev:
            warnings.append(f"line {lineno}: time went backwards")
        prev = time
        first = first or time
        last = time
        days.add(time.date())
        try:
            if category == "grant":
                downlink += int(details.get("nbytes", 0))
            elif category == "chunk":
                chunk_bytes += int(details.get("nbytes", 0))
        except ValueError:
            warnings.append(f"line {lineno}: non-integer nbytes")
    summary = {
        "events": sum(counts.values()),
        "counts": counts,
        "downlink_bytes": downlink,
        "chunk_bytes": chunk_bytes,
        "captures": counts["capture"],
        "faults": counts["fault"],
        "gate_denies": counts["gate_deny"],
        "first_time": first.isoformat() if first else None,
        "last_time": last.isoformat() if last else None,
        "days_covered": len(days),
    }
    return summary, warnings


def format_summary(summary: dict, warnings: list) -> str:
    out = ["mission log summary"]
    out.append(f"  events: {summary['events']} over "
               f"{summary['days_covered']} day(s)")
    out.append(f"  span: {summary['first_time']} .. {summary['last_time']}")
    out.append(f"  downlink granted: {summary['downlink_bytes']} B, "
               f"sent: {summary['chunk_bytes']} B")
    busy = " ".join(f"{k}={v}" for k, v in summary["counts"].items() if v)
    out.append(f"  counts: {busy or 'none'}")
    for w in warnings:
        out.append(f"  warning: {w}")
    return "\n".join(out)
