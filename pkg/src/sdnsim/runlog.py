"""Structured run log: everything a finished simulation leaves behind.

The log is the single source of truth for metric computation; metrics
recomputed from a serialized log must equal the ones computed online.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


def record_to_dict(record: Any) -> dict:
    """Dataclass record to a plain JSON-encodable dict."""
    def convert(value):
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, tuple):
            return [convert(v) for v in value]
        if isinstance(value, list):
            return [convert(v) for v in value]
        if dataclasses.is_dataclass(value):
            return {k: convert(v) for k, v in dataclasses.asdict(value).items()}
        return value

    return {k: convert(v) for k, v in dataclasses.asdict(record).items()}


@dataclass
class RunLog:
    """Append-only record streams produced by one kernel run."""

    packets: list = field(default_factory=list)
    estimation: list = field(default_factory=list)
    routes: list = field(default_factory=list)
    notifications: list = field(default_factory=list)
    faults: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    restorations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    assumption_notes: list = field(default_factory=list)
    ped_changes: list = field(default_factory=list)
    injections: list = field(default_factory=list)

    STREAMS = ("packets", "estimation", "routes", "notifications", "faults",
               "decisions", "restorations", "warnings", "assumption_notes",
               "ped_changes", "injections")

    def to_jsonl(self) -> str:
        """Serialize every record as one JSON line tagged with its stream."""
        lines = []
        for stream in self.STREAMS:
            for record in getattr(self, stream):
                payload = {"stream": stream, **record_to_dict(record)}
                lines.append(json.dumps(payload, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def parse_jsonl(text: str) -> dict[str, list[dict]]:
        """Parse a serialized log back into per-stream dict records."""
        streams: dict[str, list[dict]] = {s: [] for s in RunLog.STREAMS}
        for line in text.splitlines():
            if not line.strip():
                continue
            payload = json.loads(line)
            streams[payload.pop("stream")].append(payload)
        return streams
