"""AODV on-demand routing with an optional multipath (AOMDV-style) mode.

Routes are discovered by flooding a RREQ and unicasting a RREP back
along the reverse path; destination sequence numbers decide freshness
and stale information is discarded.  Entries expire on a timer unless
refreshed by traffic.  A link break invalidates routes through the
dead neighbor, notifies upstream precursors with a RERR, and leaves
re-discovery to the traffic source.

Multipath mode keeps several loop-free next hops per destination:
an alternate is accepted only from an advertiser whose advertised hop
count is strictly below this node's own advertised hop count for the
same sequence number, and every control packet a node sends carries
its advertised hop count, never a shorter per-copy count.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

RREQ_BYTES = 32
RREP_BYTES = 32
RERR_HEADER_BYTES = 8
RERR_ENTRY_BYTES = 8


@dataclass
class AodvConfig:
    active_route_timeout: int       # microseconds
    discovery_wait: int             # microseconds per attempt
    rreq_retries: int = 2           # retries after the first attempt
    multipath: bool = False
    intermediate_rrep: bool = False
    buffer_capacity: int = 64
    net_diameter: int = 5           # RREQ ttl; set to the node count


@dataclass(frozen=True)
class Rreq:
    origin: int
    origin_seq: int
    rreq_id: int
    dest: int
    dest_seq_known: Optional[int]
    hop_count: int
    ttl: int


@dataclass(frozen=True)
class Rrep:
    dest: int
    dest_seq: int
    hop_count: int
    origin: int
    lifetime: int                   # microseconds


@dataclass(frozen=True)
class Rerr:
    unreachable: tuple              # of (dest, dest_seq)

    @property
    def size(self) -> int:
        return RERR_HEADER_BYTES + RERR_ENTRY_BYTES * len(self.unreachable)


@dataclass
class AodvPath:
    next_hop: int
    hops: int


@dataclass
class AodvRouteEntry:
    dest: int
    dest_seq: int
    seq_valid: bool
    paths: list[AodvPath]
    advertised_hops: int
    expires_at: int
    precursors: set[int] = field(default_factory=set)

    @property
    def hop_count(self) -> int:
        return self.paths[0].hops if self.paths else self.advertised_hops

    def next_hops(self) -> list[int]:
        return [p.next_hop for p in self.paths]


@dataclass
class _Discovery:
    dest: int
    attempts: int
    timer: object
    buffer: list = field(default_factory=list)


class AodvNode:
    """Protocol state machine for one node."""

    def __init__(self, ctx, config: AodvConfig):
        self.ctx = ctx
        self.config = config
        self.node = ctx.node_id
        self.own_seq = 0
        self.rreq_id = 0
        self.table: dict[int, AodvRouteEntry] = {}
        self.seen_rreqs: set[tuple[int, int]] = set()
        self.discoveries: dict[int, _Discovery] = {}

    # -- engine hooks ---------------------------------------------------

    def start(self) -> None:
        pass  # fully reactive: silent until traffic appears

    def on_link_up(self, neighbor: int, now: int) -> None:
        pass

    def on_link_down(self, neighbor: int, now: int) -> None:
        lost: list[tuple[int, int]] = []
        upstream: set[int] = set()
        for dest in sorted(self.table):
            entry = self.table[dest]
            if not entry.paths or neighbor not in entry.next_hops():
                continue
            entry.paths = [p for p in entry.paths if p.next_hop != neighbor]
            if entry.paths:
                # surviving alternate: switch silently
                self.ctx.note_route(dest, entry.paths[0].next_hop)
                continue
            entry.dest_seq += 1
            self.ctx.note_route(dest, None)
            lost.append((dest, entry.dest_seq))
            upstream |= entry.precursors - {neighbor}
            entry.precursors.clear()
        if lost:
            self._send_rerr(tuple(lost), upstream)

    def handle_control(self, pkt, sender: int, now: int, pkt_id: int) -> None:
        if isinstance(pkt, Rreq):
            self._handle_rreq(pkt, sender, now, pkt_id)
        elif isinstance(pkt, Rrep):
            self._handle_rrep(pkt, sender, now, pkt_id)
        elif isinstance(pkt, Rerr):
            self._handle_rerr(pkt, sender, now)
        else:
            raise TypeError(f"unexpected control packet {pkt!r}")

    # -- data plane -----------------------------------------------------

    def originate_data(self, packet, now: int) -> None:
        entry = self._valid_entry(packet.dst, now)
        if entry is not None:
            self._forward_via(entry, packet, now)
            return
        disc = self.discoveries.get(packet.dst)
        if disc is None:
            disc = _Discovery(packet.dst, 0, None)
            self.discoveries[packet.dst] = disc
            self._attempt_discovery(disc, now)
        self._buffer(disc, packet)

    def forward_data(self, packet, sender: int, now: int) -> None:
        entry = self._valid_entry(packet.dst, now)
        if entry is None:
            self.ctx.drop_data(packet, "no-route")
            stored = self.table.get(packet.dst)
            if stored is not None:
                stored.dest_seq += 1
                seq = stored.dest_seq
            else:
                seq = 1
            self._send_rerr(((packet.dst, seq),), {sender})
            return
        entry.precursors.add(sender)
        self._forward_via(entry, packet, now)

    def _forward_via(self, entry: AodvRouteEntry, packet, now: int) -> None:
        entry.expires_at = now + self.config.active_route_timeout
        self.ctx.send_data(entry.paths[0].next_hop, packet)

    def next_hop(self, dest: int) -> Optional[int]:
        entry = self.table.get(dest)
        if entry is None or not entry.paths:
            return None
        return entry.paths[0].next_hop

    # -- discovery ------------------------------------------------------

    def _buffer(self, disc: _Discovery, packet) -> None:
        if len(disc.buffer) >= self.config.buffer_capacity:
            oldest = disc.buffer.pop(0)
            self.ctx.drop_data(oldest, "buffer-overflow")
        disc.buffer.append(packet)

    def _attempt_discovery(self, disc: _Discovery, now: int) -> None:
        disc.attempts += 1
        self.own_seq += 1
        self.rreq_id += 1
        stored = self.table.get(disc.dest)
        dest_seq_known = stored.dest_seq if stored is not None and stored.seq_valid \
            else None
        rreq = Rreq(
            origin=self.node,
            origin_seq=self.own_seq,
            rreq_id=self.rreq_id,
            dest=disc.dest,
            dest_seq_known=dest_seq_known,
            hop_count=0,
            ttl=self.config.net_diameter,
        )
        self.seen_rreqs.add((self.node, self.rreq_id))
        self.ctx.broadcast_control(
            rreq, RREQ_BYTES, "rreq", f"{self.node}>{disc.dest}"
        )
        disc.timer = self.ctx.schedule(
            now + self.config.discovery_wait,
            lambda t, d=disc: self._discovery_timeout(d, t),
        )

    def _discovery_timeout(self, disc: _Discovery, now: int) -> None:
        if self.discoveries.get(disc.dest) is not disc:
            return  # resolved meanwhile
        if disc.attempts <= self.config.rreq_retries:
            self._attempt_discovery(disc, now)
            return
        del self.discoveries[disc.dest]
        for packet in disc.buffer:
            self.ctx.drop_data(packet, "no-route")
        disc.buffer.clear()

    def _resolve_discovery(self, dest: int, now: int) -> None:
        disc = self.discoveries.pop(dest, None)
        if disc is None:
            return
        if disc.timer is not None:
            self.ctx.cancel(disc.timer)
        for packet in disc.buffer:
            entry = self._valid_entry(dest, now)
            if entry is None:
                self.ctx.drop_data(packet, "no-route")
            else:
                self._forward_via(entry, packet, now)
        disc.buffer.clear()

    # -- control handlers -------------------------------------------------

    def _handle_rreq(self, rreq: Rreq, sender: int, now: int, pkt_id: int) -> None:
        key = (rreq.origin, rreq.rreq_id)
        duplicate = key in self.seen_rreqs
        if duplicate and (not self.config.multipath or rreq.origin == self.node):
            self.ctx.drop_control(pkt_id, "rreq", RREQ_BYTES, "DUP")
            return
        self.seen_rreqs.add(key)

        installed = self._accept_route(
            dest=rreq.origin,
            seq=rreq.origin_seq,
            advertiser_hops=rreq.hop_count,
            via=sender,
            lifetime=self.config.active_route_timeout,
            now=now,
        )
        if duplicate and not installed:
            self.ctx.drop_control(pkt_id, "rreq", RREQ_BYTES, "DUP")
            return

        if rreq.dest == self.node:
            # reply once per accepted copy; non-multipath saw duplicates out above
            if rreq.dest_seq_known is not None:
                self.own_seq = max(self.own_seq, rreq.dest_seq_known)
            rrep = Rrep(
                dest=self.node,
                dest_seq=self.own_seq,
                hop_count=0,
                origin=rreq.origin,
                lifetime=self.config.active_route_timeout,
            )
            self.ctx.unicast_control(
                sender, rrep, RREP_BYTES, "rrep", f"{rreq.origin}>{self.node}"
            )
            return

        if duplicate:
            return  # multipath: alternate reverse path stored, no re-flood

        if self.config.intermediate_rrep:
            entry = self._valid_entry(rreq.dest, now)
            fresh = entry is not None and entry.seq_valid and (
                rreq.dest_seq_known is None
                or entry.dest_seq >= rreq.dest_seq_known
            )
            if fresh:
                rrep = Rrep(
                    dest=rreq.dest,
                    dest_seq=entry.dest_seq,
                    hop_count=entry.advertised_hops,
                    origin=rreq.origin,
                    lifetime=max(0, entry.expires_at - now),
                )
                self.ctx.unicast_control(
                    sender, rrep, RREP_BYTES, "rrep", f"{rreq.origin}>{rreq.dest}"
                )
                return

        if rreq.ttl <= 1:
            self.ctx.drop_control(pkt_id, "rreq", RREQ_BYTES, "TTL")
            return
        onward = replace(
            rreq,
            hop_count=self.table[rreq.origin].advertised_hops,
            ttl=rreq.ttl - 1,
        )
        self.ctx.broadcast_control(
            onward, RREQ_BYTES, "rreq", f"{rreq.origin}>{rreq.dest}"
        )

    def _handle_rrep(self, rrep: Rrep, sender: int, now: int, pkt_id: int) -> None:
        if rrep.origin != self.node:
            reverse = self._valid_entry(rrep.origin, now)
            if reverse is None:
                self.ctx.drop_control(pkt_id, "rrep", RREP_BYTES, "NOREV")
                return
        installed = self._accept_route(
            dest=rrep.dest,
            seq=rrep.dest_seq,
            advertiser_hops=rrep.hop_count,
            via=sender,
            lifetime=rrep.lifetime,
            now=now,
        )
        if not installed:
            self.ctx.drop_control(pkt_id, "rrep", RREP_BYTES, "STALE")
            return
        if rrep.origin == self.node:
            self._resolve_discovery(rrep.dest, now)
            return
        forward_entry = self.table[rrep.dest]
        next_toward_origin = reverse.paths[0].next_hop
        forward_entry.precursors.add(next_toward_origin)
        onward = replace(rrep, hop_count=forward_entry.advertised_hops)
        self.ctx.unicast_control(
            next_toward_origin, onward, RREP_BYTES, "rrep",
            f"{rrep.origin}>{rrep.dest}",
        )

    def _handle_rerr(self, rerr: Rerr, sender: int, now: int) -> None:
        propagate: list[tuple[int, int]] = []
        upstream: set[int] = set()
        for dest, seq in rerr.unreachable:
            entry = self.table.get(dest)
            if entry is None or not entry.paths:
                continue
            if sender not in entry.next_hops():
                continue
            entry.paths = [p for p in entry.paths if p.next_hop != sender]
            if entry.paths:
                self.ctx.note_route(dest, entry.paths[0].next_hop)
                continue
            entry.dest_seq = max(entry.dest_seq, seq)
            self.ctx.note_route(dest, None)
            propagate.append((dest, entry.dest_seq))
            upstream |= entry.precursors - {sender}
            entry.precursors.clear()
        if propagate:
            self._send_rerr(tuple(propagate), upstream)

    def _send_rerr(self, unreachable: tuple, recipients: set[int]) -> None:
        if not recipients:
            return
        rerr = Rerr(unreachable)
        detail = ",".join(str(d) for d, _ in unreachable)
        for neighbor in sorted(recipients):
            self.ctx.unicast_control(neighbor, rerr, rerr.size, "rerr", detail)

    # -- route table ------------------------------------------------------

    def _valid_entry(self, dest: int, now: int) -> Optional[AodvRouteEntry]:
        entry = self.table.get(dest)
        if entry is None or not entry.paths:
            return None
        if now > entry.expires_at:
            entry.paths = []
            self.ctx.note_route(dest, None)
            return None
        return entry

    def expire_routes(self, now: int) -> None:
        """Invalidate every entry past its expiry (seq retained)."""
        for dest in sorted(self.table):
            entry = self.table[dest]
            if entry.paths and now > entry.expires_at:
                entry.paths = []
                self.ctx.note_route(dest, None)

    def _accept_route(
        self, dest: int, seq: int, advertiser_hops: int, via: int,
        lifetime: int, now: int,
    ) -> bool:
        if dest == self.node:
            return False
        hops = advertiser_hops + 1
        entry = self.table.get(dest)

        fresh = (
            entry is None
            or seq > entry.dest_seq
            or (not entry.paths and seq >= entry.dest_seq)
        )
        if fresh:
            old_next = entry.paths[0].next_hop if entry and entry.paths else None
            self.table[dest] = AodvRouteEntry(
                dest=dest,
                dest_seq=max(seq, entry.dest_seq) if entry else seq,
                seq_valid=True,
                paths=[AodvPath(via, hops)],
                advertised_hops=hops,
                expires_at=now + lifetime,
            )
            if old_next != via:
                self.ctx.note_route(dest, via)
            else:
                self.ctx.touch_routing()
            return True

        if seq < entry.dest_seq:
            return False

        # equal sequence number, valid entry
        if self.config.multipath:
            for path in entry.paths:
                if path.next_hop == via:
                    if hops < path.hops:
                        path.hops = hops
                        entry.expires_at = max(entry.expires_at, now + lifetime)
                        self.ctx.touch_routing()
                        return True
                    return False
            if advertiser_hops < entry.advertised_hops:
                entry.paths.append(AodvPath(via, hops))
                entry.expires_at = max(entry.expires_at, now + lifetime)
                self.ctx.touch_routing()
                return True
            return False

        if hops < entry.paths[0].hops:
            old_next = entry.paths[0].next_hop
            entry.paths = [AodvPath(via, hops)]
            entry.advertised_hops = hops
            entry.expires_at = now + lifetime
            if old_next != via:
                self.ctx.note_route(dest, via)
            else:
                self.ctx.touch_routing()
            return True
        return False
