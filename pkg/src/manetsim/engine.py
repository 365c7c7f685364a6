"""Deterministic discrete-event engine.

Simulation time is an integer count of microseconds so that event
ordering never depends on floating-point rounding.  Events fire in
(fire_at, insertion_seq) order: ties at the same instant dispatch in the
order they were scheduled.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

US_PER_S = 1_000_000

EVENT_KINDS = (
    "packet-delivery",
    "timer-expiry",
    "link-change",
    "traffic-emit",
    "mobility-checkpoint",
)


def us_from_s(seconds: float) -> int:
    """Convert seconds to integer microseconds (nearest)."""
    return round(seconds * US_PER_S)


def s_from_us(t_us: int) -> float:
    return t_us / US_PER_S


def format_time(t_us: int) -> str:
    """Render microseconds as decimal seconds with exactly 6 places."""
    return f"{t_us // US_PER_S}.{t_us % US_PER_S:06d}"


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the current clock."""


@dataclass
class Event:
    fire_at: int                       # microseconds
    insertion_seq: int
    kind: str
    target: Optional[int]              # node id, or None for engine-internal
    fn: Callable[[int], None] = field(repr=False)
    cancelled: bool = False
    fired: bool = False


class EventHandle:
    """Opaque handle returned by schedule(); usable for cancellation."""

    __slots__ = ("_event",)

    def __init__(self, event: Event):
        self._event = event

    @property
    def fire_at(self) -> int:
        return self._event.fire_at

    @property
    def pending(self) -> bool:
        return not (self._event.cancelled or self._event.fired)


class Simulator:
    """Single-threaded event loop over a (fire_at, insertion_seq) heap."""

    def __init__(self, record_dispatches: bool = False):
        self.clock: int = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Event]] = []
        self.dispatch_log: Optional[list[tuple[int, int, str, Optional[int]]]] = (
            [] if record_dispatches else None
        )

    def schedule(
        self,
        fire_at: int,
        kind: str,
        fn: Callable[[int], None],
        target: Optional[int] = None,
    ) -> EventHandle:
        if fire_at < self.clock:
            raise SchedulingInPast(
                f"cannot schedule at {format_time(fire_at)}; "
                f"clock is {format_time(self.clock)}"
            )
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = Event(fire_at, self._seq, kind, target, fn)
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.insertion_seq, event))
        return EventHandle(event)

    def schedule_in(
        self,
        delay_us: int,
        kind: str,
        fn: Callable[[int], None],
        target: Optional[int] = None,
    ) -> EventHandle:
        return self.schedule(self.clock + delay_us, kind, fn, target)

    def cancel(self, handle: EventHandle) -> bool:
        event = handle._event
        if event.cancelled or event.fired:
            return False
        event.cancelled = True
        return True

    def pending_count(self) -> int:
        return sum(1 for _, _, e in self._heap if not e.cancelled)

    def run_until(
        self,
        t_end: int,
        after_event: Optional[Callable[[Event], None]] = None,
    ) -> int:
        """Dispatch all events with fire_at <= t_end; leave clock at t_end."""
        if t_end < self.clock:
            raise SchedulingInPast(
                f"run_until({format_time(t_end)}) is before the clock"
            )
        dispatched = 0
        while self._heap and self._heap[0][0] <= t_end:
            _, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            self.clock = event.fire_at
            event.fired = True
            if self.dispatch_log is not None:
                self.dispatch_log.append(
                    (event.fire_at, event.insertion_seq, event.kind, event.target)
                )
            event.fn(self.clock)
            dispatched += 1
            if after_event is not None:
                after_event(event)
        self.clock = t_end
        return dispatched
