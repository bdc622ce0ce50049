"""Deterministic event queue.

Events are ordered by (time, kind priority, device id, insertion order), so a
run is fully determined by its inputs and random source.
"""

from __future__ import annotations

import heapq
import itertools
from enum import IntEnum
from typing import Any, NamedTuple

__all__ = ["EventKind", "Event", "EventQueue"]


class EventKind(IntEnum):
    # lower value runs first at equal time
    FRAME_START = 0
    ARRIVAL = 1
    READY = 2
    ESTIMATION_RAO = 3
    SIB = 4
    RAO = 5
    RAR = 6
    MSG3 = 7
    MSG4 = 8
    FAILURE = 9


class Event(NamedTuple):
    time: int
    kind: EventKind
    device: int
    payload: Any


class EventQueue:
    def __init__(self, trace: list | None = None):
        self._heap: list = []
        self._seq = itertools.count()
        self.trace = trace
        self.now = 0

    def push(self, time: int, kind: EventKind, device: int = -1, payload: Any = None) -> None:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind.name} at {time} before now={self.now}")
        heapq.heappush(self._heap, (time, int(kind), device, next(self._seq), payload))

    def pop(self) -> Event:
        time, kind, device, _, payload = heapq.heappop(self._heap)
        self.now = time
        ev = Event(time, EventKind(kind), device, payload)
        if self.trace is not None:
            self.trace.append((time, ev.kind.name, device))
        return ev

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)
