"""Append-only study event log.

One JSON object per line, in append order.  Under a seeded study the
timestamp is a logical clock (the sequence number) so two runs with the
same seed and the same answers produce byte-identical logs; unseeded
studies record wall-clock time as well.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Iterator

EVENT_TYPES = frozenset(
    {"study_created", "session_created", "question_issued", "answer_recorded",
     "model_snapshot", "session_finished", "study_finalized"}
)


class EventStore:
    def __init__(self, path: str | Path | None = None, deterministic: bool = True):
        self._path = Path(path) if path is not None else None
        self._deterministic = deterministic
        self._events: list[dict] = []
        self._fh = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self._path, "a", encoding="utf-8")

    @property
    def path(self) -> Path | None:
        return self._path

    def append(self, event_type: str, **payload) -> dict:
        if event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {event_type!r}")
        event = {"seq": len(self._events), "ts": len(self._events), "type": event_type}
        if not self._deterministic:
            event["wall_time"] = time.time()
        event.update(payload)
        self._events.append(event)
        if self._fh is not None:
            self._fh.write(json.dumps(event, separators=(",", ":"), sort_keys=True))
            self._fh.write("\n")
            self._fh.flush()
        return event

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[dict]:
        return iter(self._events)

    def of_type(self, event_type: str) -> list[dict]:
        return [e for e in self._events if e["type"] == event_type]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_events(path: str | Path) -> list[dict]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    for i, event in enumerate(events):
        if event.get("seq") != i:
            raise ValueError(f"event log corrupt: expected seq {i}, got {event.get('seq')}")
    return events
