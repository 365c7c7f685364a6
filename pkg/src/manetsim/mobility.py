"""Waypoint motion and the disk radio-range connectivity model.

Node motion is piecewise linear: a node sits at its initial position,
departs on each leg at its depart time, travels in a straight line at
constant speed, and waits at the leg destination until the next leg.
Link up/down instants are found by solving the per-segment quadratic
|p_b(t) - p_a(t)|^2 = range^2 exactly, never by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import US_PER_S, s_from_us, us_from_s


class UnknownNode(Exception):
    pass


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Leg:
    depart_at: int          # microseconds
    destination: Position
    speed: float            # meters/second, > 0


@dataclass(frozen=True)
class LinkEvent:
    at: int                 # microseconds
    a: int                  # canonical a < b
    b: int
    kind: str               # "up" | "down"


class WaypointSchedule:
    """Motion plan for one node; immutable after construction."""

    def __init__(self, node: int, initial: Position, legs: list[Leg] | None = None):
        self.node = node
        self.initial = initial
        self.legs = list(legs or [])
        # Precompute (depart, arrive, from, to) segments and validate overlap.
        self._segments: list[tuple[int, int, Position, Position]] = []
        here = initial
        prev_arrive = 0
        for leg in self.legs:
            if leg.speed <= 0:
                raise ValueError(f"node {node}: leg speed must be positive")
            if leg.depart_at < prev_arrive:
                raise ValueError(
                    f"node {node}: leg departing at {s_from_us(leg.depart_at)}s "
                    f"overlaps the previous leg"
                )
            travel_s = here.distance_to(leg.destination) / leg.speed
            arrive = leg.depart_at + us_from_s(travel_s)
            self._segments.append((leg.depart_at, arrive, here, leg.destination))
            here = leg.destination
            prev_arrive = arrive

    def position_at(self, t_us: int) -> Position:
        pos = self.initial
        for depart, arrive, origin, dest in self._segments:
            if t_us < depart:
                return pos
            if t_us >= arrive:
                pos = dest
                continue
            frac = (t_us - depart) / (arrive - depart)
            return Position(
                origin.x + frac * (dest.x - origin.x),
                origin.y + frac * (dest.y - origin.y),
            )
        return pos

    def breakpoints(self) -> list[int]:
        """Times (us) at which this node's velocity may change."""
        out = []
        for depart, arrive, _, _ in self._segments:
            out.append(depart)
            out.append(arrive)
        return out

    def velocity_at(self, t_us: int) -> tuple[float, float]:
        """Velocity in m/s on the open segment containing t_us."""
        for depart, arrive, origin, dest in self._segments:
            if depart <= t_us < arrive:
                dur_s = (arrive - depart) / US_PER_S
                return ((dest.x - origin.x) / dur_s, (dest.y - origin.y) / dur_s)
        return (0.0, 0.0)


class Topology:
    """All node schedules plus range queries over them."""

    def __init__(self, schedules: dict[int, WaypointSchedule]):
        self.schedules = dict(schedules)

    def _schedule(self, node: int) -> WaypointSchedule:
        try:
            return self.schedules[node]
        except KeyError:
            raise UnknownNode(f"node {node} is not declared") from None

    def position_at(self, node: int, t_us: int) -> Position:
        return self._schedule(node).position_at(t_us)

    def in_range(self, a: int, b: int, t_us: int, radio_range: float) -> bool:
        """True iff euclidean distance <= radio_range (boundary inclusive)."""
        pa = self.position_at(a, t_us)
        pb = self.position_at(b, t_us)
        dx = pa.x - pb.x
        dy = pa.y - pb.y
        return dx * dx + dy * dy <= radio_range * radio_range

    def initial_links(self, radio_range: float) -> set[tuple[int, int]]:
        ids = sorted(self.schedules)
        return {
            (a, b)
            for i, a in enumerate(ids)
            for b in ids[i + 1:]
            if self.in_range(a, b, 0, radio_range)
        }

    def connectivity_events(self, radio_range: float, duration_us: int) -> list[LinkEvent]:
        """All range crossings for every pair in [0, duration], sorted."""
        events: list[LinkEvent] = []
        ids = sorted(self.schedules)
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                events.extend(
                    self._pair_events(a, b, radio_range, duration_us)
                )
        events.sort(key=lambda e: (e.at, e.a, e.b))
        return events

    def _pair_events(
        self, a: int, b: int, radio_range: float, duration_us: int
    ) -> list[LinkEvent]:
        sched_a = self._schedule(a)
        sched_b = self._schedule(b)
        cuts = {0, duration_us}
        for t in sched_a.breakpoints() + sched_b.breakpoints():
            if 0 < t < duration_us:
                cuts.add(t)
        boundaries = sorted(cuts)

        in_range = self.in_range(a, b, 0, radio_range)
        out: list[LinkEvent] = []
        rr2 = radio_range * radio_range

        for t0, t1 in zip(boundaries, boundaries[1:]):
            if t1 <= t0:
                continue
            pa = sched_a.position_at(t0)
            pb = sched_b.position_at(t0)
            va = sched_a.velocity_at(t0)
            vb = sched_b.velocity_at(t0)
            px, py = pb.x - pa.x, pb.y - pa.y
            vx, vy = vb[0] - va[0], vb[1] - va[1]
            # f(s) = |p + v s|^2 - R^2 over s in seconds since t0
            c2 = vx * vx + vy * vy
            c1 = 2.0 * (px * vx + py * vy)
            c0 = px * px + py * py - rr2
            span_s = (t1 - t0) / US_PER_S
            for root_s in _quadratic_roots(c2, c1, c0):
                if root_s <= 0.0 or root_s > span_s:
                    continue
                t_root = t0 + us_from_s(root_s)
                if t_root > duration_us:
                    continue
                # Derivative sign tells entering (-) vs leaving (+).
                slope = 2.0 * c2 * root_s + c1
                if slope < 0.0 and not in_range:
                    in_range = True
                    out.append(LinkEvent(t_root, a, b, "up"))
                elif slope > 0.0 and in_range:
                    in_range = False
                    out.append(LinkEvent(t_root, a, b, "down"))
                # slope == 0: tangent touch, no state change
        return _drop_zero_width(out)


def _quadratic_roots(c2: float, c1: float, c0: float) -> list[float]:
    """Real roots of c2 s^2 + c1 s + c0, ascending."""
    if c2 == 0.0:
        if c1 == 0.0:
            return []
        return [-c0 / c1]
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return []
    sq = math.sqrt(disc)
    return sorted(((-c1 - sq) / (2.0 * c2), (-c1 + sq) / (2.0 * c2)))


def _drop_zero_width(events: list[LinkEvent]) -> list[LinkEvent]:
    """Remove up/down pairs closer than 1 us (tangential grazes)."""
    out: list[LinkEvent] = []
    for ev in events:
        if out and ev.at - out[-1].at < 1 and out[-1].kind != ev.kind:
            out.pop()
            continue
        out.append(ev)
    return out
