"""DSDV: destination-sequenced distance-vector routing.

Every node owns a monotonically increasing even sequence number and
advertises it with its self-route; the highest sequence number seen for
a destination always wins, with hop count breaking ties.  A broken
route is marked by bumping the stored (even) sequence number to the
next odd value with an infinite metric, which lets the break outrun any
stale finite advertisement.  Advertisement of improvable routes is
damped by a per-destination settling-time estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

INFINITY = math.inf

UPDATE_HEADER_BYTES = 8
UPDATE_ENTRY_BYTES = 12


@dataclass
class DsdvConfig:
    periodic_interval: int      # microseconds
    settling_weight: float = 0.5
    settling_factor: float = 2.0


@dataclass
class DsdvRouteEntry:
    dest: int
    next_hop: int
    metric: float               # hop count, or INFINITY when broken
    dest_seq: int
    install_at: int
    advertised: bool = False
    settling_due: Optional[int] = None
    seq_first_at: int = 0       # when this dest_seq generation first arrived


@dataclass(frozen=True)
class DsdvUpdate:
    origin: int
    kind: str                   # "full" | "incr"
    entries: tuple              # of (dest, metric, dest_seq)

    @property
    def size(self) -> int:
        return UPDATE_HEADER_BYTES + UPDATE_ENTRY_BYTES * len(self.entries)


class DsdvNode:
    """Protocol state machine for one node."""

    def __init__(self, ctx, config: DsdvConfig):
        self.ctx = ctx
        self.config = config
        self.node = ctx.node_id
        self.own_seq = 0
        self.table: dict[int, DsdvRouteEntry] = {
            self.node: DsdvRouteEntry(self.node, self.node, 0, 0, 0, advertised=True)
        }
        self._settling: dict[int, float] = {}     # dest -> estimated delay (us)
        self._dirty: dict[int, int] = {}          # dest -> advertisement due (us)

    # -- engine hooks ---------------------------------------------------

    def start(self) -> None:
        self.ctx.schedule(0, self._periodic_dump)

    def on_link_up(self, neighbor: int, now: int) -> None:
        pass  # neighbors are learned from their updates

    def on_link_down(self, neighbor: int, now: int) -> None:
        broken = []
        for entry in self.table.values():
            if entry.dest != self.node and entry.next_hop == neighbor \
                    and entry.metric != INFINITY:
                entry.metric = INFINITY
                entry.dest_seq += 1          # becomes odd
                entry.install_at = now
                entry.advertised = False
                entry.settling_due = now
                broken.append(entry.dest)
                self.ctx.note_route(entry.dest, None)
        for dest in broken:
            self._mark_dirty(dest, now)

    def handle_control(
        self, update: DsdvUpdate, sender: int, now: int, pkt_id: int
    ) -> None:
        for dest, metric, seq in update.entries:
            self._consider(dest, metric, seq, sender, now)

    # -- data plane -----------------------------------------------------

    def originate_data(self, packet, now: int) -> None:
        self._route_or_drop(packet)

    def forward_data(self, packet, sender: int, now: int) -> None:
        self._route_or_drop(packet)

    def _route_or_drop(self, packet) -> None:
        next_hop = self.next_hop(packet.dst)
        if next_hop is None:
            self.ctx.drop_data(packet, "no-route")
        else:
            self.ctx.send_data(next_hop, packet)

    def next_hop(self, dest: int) -> Optional[int]:
        entry = self.table.get(dest)
        if entry is None or entry.metric == INFINITY:
            return None
        return entry.next_hop

    # -- update processing ----------------------------------------------

    def _consider(self, dest: int, metric: float, seq: int, sender: int, now: int) -> None:
        if dest == self.node:
            return  # self-route is never overwritten
        candidate = metric + 1
        entry = self.table.get(dest)
        if entry is not None:
            if seq < entry.dest_seq:
                return
            if seq == entry.dest_seq and candidate >= entry.metric:
                return
        new_generation = entry is None or seq > entry.dest_seq
        old_usable = entry is not None and entry.metric != INFINITY
        old_metric = entry.metric if entry is not None else None
        old_next = entry.next_hop if old_usable else None

        if new_generation:
            first_at = now
        else:
            # same-sequence improvement: feed the settling estimator
            first_at = entry.seq_first_at
            observed = now - first_at
            prev = self._settling.get(dest, 0.0)
            w = self.config.settling_weight
            self._settling[dest] = w * observed + (1.0 - w) * prev

        self.table[dest] = DsdvRouteEntry(
            dest=dest,
            next_hop=sender,
            metric=candidate,
            dest_seq=seq,
            install_at=now,
            advertised=False,
            seq_first_at=first_at,
        )

        if candidate == INFINITY:
            due = now                                     # breaks go out at once
        elif new_generation and (old_metric is None or candidate <= old_metric):
            due = now                                     # fresh and no worse
        else:
            due = now + round(self.config.settling_factor
                              * self._settling.get(dest, 0.0))
        self.table[dest].settling_due = due
        self._mark_dirty(dest, due)

        new_next = sender if candidate != INFINITY else None
        if new_next != old_next:
            self.ctx.note_route(dest, new_next)
        else:
            self.ctx.touch_routing()

    # -- advertisements ---------------------------------------------------

    def _mark_dirty(self, dest: int, due: int) -> None:
        current = self._dirty.get(dest)
        if current is not None and current <= due:
            return
        self._dirty[dest] = due
        self.ctx.schedule(due, self._advert_pump)

    def _advert_pump(self, now: int) -> None:
        ready = sorted(d for d, due in self._dirty.items() if due <= now)
        if not ready:
            return
        entries = []
        for dest in ready:
            del self._dirty[dest]
            entry = self.table[dest]
            entry.advertised = True
            entries.append((dest, entry.metric, entry.dest_seq))
        update = DsdvUpdate(self.node, "incr", tuple(entries))
        self.ctx.broadcast_control(update, update.size, "dsdv", "incr")

    def _periodic_dump(self, now: int) -> None:
        self.own_seq += 2
        self_entry = self.table[self.node]
        self_entry.dest_seq = self.own_seq
        self._dirty.clear()
        entries = tuple(
            (d, e.metric, e.dest_seq) for d, e in sorted(self.table.items())
        )
        for entry in self.table.values():
            entry.advertised = True
        update = DsdvUpdate(self.node, "full", entries)
        self.ctx.broadcast_control(update, update.size, "dsdv", "full")
        self.ctx.schedule(now + self.config.periodic_interval, self._periodic_dump)
