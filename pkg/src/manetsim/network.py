"""Simulation harness: wires mobility, protocols, traffic and tracing.

Per-hop transmission succeeds iff the two nodes are in range at the
send instant, arrives after a fixed hop delay plus seeded per-node
jitter, and is lost if the link goes down while the packet is in
flight.  Broadcasts reach the current in-range neighbors only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Callable, Optional

from .aodv import AodvConfig, AodvNode
from .dsdv import DsdvConfig, DsdvNode
from .engine import Simulator, us_from_s
from .mobility import LinkEvent, Topology
from .rng import RngStream
from .scenario import Scenario
from .trace import (
    DROP_BUFFER,
    DROP_END,
    DROP_LINK,
    DROP_NO_ROUTE,
    DROP_TTL,
    TraceRecord,
    TraceWriter,
)
from .traffic import (
    Accounting,
    DataPacket,
    RunSummary,
    ThroughputSeries,
    throughput_series,
)

_DROP_TOKENS = {
    "no-route": DROP_NO_ROUTE,
    "ttl": DROP_TTL,
    "buffer-overflow": DROP_BUFFER,
    "link-down-in-flight": DROP_LINK,
    "end-of-run": DROP_END,
}


class _NodeContext:
    """The slice of the harness a protocol instance is allowed to touch."""

    __slots__ = ("sim", "node_id")

    def __init__(self, sim: "Simulation", node_id: int):
        self.sim = sim
        self.node_id = node_id

    def schedule(self, at_us: int, fn) -> object:
        return self.sim.engine.schedule(at_us, "timer-expiry", fn, self.node_id)

    def cancel(self, handle) -> bool:
        return self.sim.engine.cancel(handle)

    def broadcast_control(self, pkt, size, kind, detail) -> None:
        self.sim.broadcast_control(self.node_id, pkt, size, kind, detail)

    def unicast_control(self, dest, pkt, size, kind, detail) -> None:
        self.sim.unicast_control(self.node_id, dest, pkt, size, kind, detail)

    def send_data(self, next_hop: int, packet: DataPacket) -> None:
        self.sim.send_data(self.node_id, next_hop, packet)

    def drop_data(self, packet: DataPacket, reason: str) -> None:
        self.sim.drop_data(self.node_id, packet, reason)

    def drop_control(self, pkt_id: int, kind: str, size: int, detail: str) -> None:
        self.sim.trace(
            "d", self.node_id, "RTR", kind, pkt_id, size, detail
        )

    def note_route(self, dest: int, next_hop: Optional[int]) -> None:
        self.sim.note_route(self.node_id, dest, next_hop)

    def touch_routing(self) -> None:
        self.sim.routing_generation += 1


@dataclass
class _InFlight:
    handle: object
    sender: int
    packet: Optional[DataPacket]        # None for control packets
    kind: str
    pkt_id: int
    size: int


@dataclass
class RunResult:
    scenario: Scenario
    summary: RunSummary
    tracer: TraceWriter
    route_log: list[tuple[int, int, int, Optional[int]]]
    deliveries: list[tuple[int, int]]
    dispatched: int

    def series(self, bin_width_us: int) -> ThroughputSeries:
        return throughput_series(
            self.deliveries, bin_width_us, self.scenario.duration
        )

    def next_hop_intervals(self, node: int, dest: int) -> list[tuple[int, Optional[int]]]:
        """(time_us, next_hop) change points for one node and destination."""
        return [
            (t, nh) for t, n, d, nh in self.route_log if n == node and d == dest
        ]


class Simulation:
    """One deterministic run over a parsed scenario."""

    def __init__(
        self,
        scenario: Scenario,
        trace_stream: IO[str] | None = None,
        record_dispatches: bool = False,
    ):
        self.scenario = scenario
        self.engine = Simulator(record_dispatches=record_dispatches)
        self.topology = Topology(scenario.schedules)
        self.tracer = TraceWriter(trace_stream)
        self.accounting = Accounting()
        self.route_log: list[tuple[int, int, int, Optional[int]]] = []
        self.routing_generation = 0

        self.hop_delay = us_from_s(scenario.param("net.hop_delay"))
        self.jitter = us_from_s(scenario.param("net.jitter"))
        self.drop_prob = scenario.param("net.drop_prob")

        nodes = sorted(scenario.schedules)
        self._jitter_rng = {
            n: RngStream(scenario.seed, f"jitter/{n}") for n in nodes
        }
        self._loss_rng = {
            n: RngStream(scenario.seed, f"loss/{n}") for n in nodes
        }

        # Link state, seeded from the geometry at t=0.
        self.links: set[tuple[int, int]] = self.topology.initial_links(
            scenario.radio_range
        )
        self.adjacency: dict[int, set[int]] = {n: set() for n in nodes}
        for a, b in self.links:
            self.adjacency[a].add(b)
            self.adjacency[b].add(a)
        self._inflight: dict[tuple[int, int], list[_InFlight]] = {}
        self.link_events = self.topology.connectivity_events(
            scenario.radio_range, scenario.duration
        )
        for ev in self.link_events:
            self.engine.schedule(
                ev.at, "link-change",
                lambda now, e=ev: self._apply_link_event(e, now),
            )

        # Protocol instances.
        self.protocols: dict[int, DsdvNode | AodvNode] = {}
        for n in nodes:
            ctx = _NodeContext(self, n)
            if scenario.protocol == "dsdv":
                config = DsdvConfig(
                    periodic_interval=us_from_s(
                        scenario.param("dsdv.periodic_interval")
                    ),
                    settling_weight=scenario.param("dsdv.settling_weight"),
                    settling_factor=scenario.param("dsdv.settling_factor"),
                )
                self.protocols[n] = DsdvNode(ctx, config)
            else:
                config = AodvConfig(
                    active_route_timeout=us_from_s(
                        scenario.param("aodv.active_route_timeout")
                    ),
                    discovery_wait=us_from_s(scenario.param("aodv.discovery_wait")),
                    rreq_retries=scenario.param("aodv.rreq_retries"),
                    multipath=scenario.param("aodv.multipath"),
                    intermediate_rrep=scenario.param("aodv.intermediate_rrep"),
                    buffer_capacity=scenario.param("aodv.buffer_capacity"),
                    net_diameter=len(nodes),
                )
                self.protocols[n] = AodvNode(ctx, config)
        for n in nodes:
            self.protocols[n].start()

        # Traffic.
        self._pkt_counter = 0
        self._node_count = len(nodes)
        for flow in scenario.flows:
            for seq_no, t in enumerate(flow.emission_times()):
                self.engine.schedule(
                    t, "traffic-emit",
                    lambda now, f=flow, s=seq_no: self._emit(f, s, now),
                    flow.src,
                )

    # -- driving ----------------------------------------------------------

    def run(self, after_event: Optional[Callable] = None) -> RunResult:
        dispatched = self.engine.run_until(self.scenario.duration, after_event)
        self._finalize()
        return RunResult(
            scenario=self.scenario,
            summary=self.accounting.summary(),
            tracer=self.tracer,
            route_log=self.route_log,
            deliveries=list(self.accounting.deliveries),
            dispatched=dispatched,
        )

    def _finalize(self) -> None:
        # Packets still buffered or in flight at cutoff are lost.
        for packet in self.accounting.unaccounted():
            self.accounting.packet_dropped(packet, "end-of-run")
            self.trace(
                "d", packet.src, "RTR", "cbr", packet.pkt_id, packet.size,
                DROP_END,
            )

    # -- link state ---------------------------------------------------------

    def neighbors(self, node: int) -> list[int]:
        return sorted(self.adjacency[node])

    def _apply_link_event(self, ev: LinkEvent, now: int) -> None:
        pair = (ev.a, ev.b)
        if ev.kind == "up":
            self.links.add(pair)
            self.adjacency[ev.a].add(ev.b)
            self.adjacency[ev.b].add(ev.a)
            self.protocols[ev.a].on_link_up(ev.b, now)
            self.protocols[ev.b].on_link_up(ev.a, now)
        else:
            self.links.discard(pair)
            self.adjacency[ev.a].discard(ev.b)
            self.adjacency[ev.b].discard(ev.a)
            self._drop_inflight(pair, now)
            self.protocols[ev.a].on_link_down(ev.b, now)
            self.protocols[ev.b].on_link_down(ev.a, now)
        self.routing_generation += 1

    def _drop_inflight(self, pair: tuple[int, int], now: int) -> None:
        for item in self._inflight.pop(pair, []):
            if not self.engine.cancel(item.handle):
                continue
            if item.packet is not None:
                self.accounting.packet_dropped(item.packet, "link-down-in-flight")
            self.trace(
                "d", item.sender, "RTR", item.kind, item.pkt_id, item.size,
                DROP_LINK,
            )

    # -- transmission ---------------------------------------------------------

    def _delay(self, sender: int) -> int:
        if self.jitter > 0:
            return self.hop_delay + round(
                self._jitter_rng[sender].random() * self.jitter
            )
        return self.hop_delay

    def _lost(self, sender: int) -> bool:
        return self.drop_prob > 0 and (
            self._loss_rng[sender].random() < self.drop_prob
        )

    def _ship(
        self, sender: int, receiver: int, packet: Optional[DataPacket],
        control, kind: str, pkt_id: int, size: int,
    ) -> None:
        now = self.engine.clock
        if self._lost(sender):
            if packet is not None:
                self.accounting.packet_dropped(packet, "link-down-in-flight")
            self.trace("d", sender, "RTR", kind, pkt_id, size, DROP_LINK)
            return
        pair = (min(sender, receiver), max(sender, receiver))
        entry_list = self._inflight.setdefault(pair, [])
        item = _InFlight(None, sender, packet, kind, pkt_id, size)

        def arrive(now_us: int, it=item, p=pair) -> None:
            items = self._inflight.get(p)
            if items and it in items:
                items.remove(it)
            if it.packet is not None:
                self._data_arrived(it.packet, it.sender, receiver, now_us)
            else:
                self.protocols[receiver].handle_control(
                    control, it.sender, now_us, it.pkt_id
                )

        item.handle = self.engine.schedule(
            now + self._delay(sender), "packet-delivery", arrive, receiver
        )
        entry_list.append(item)

    def _next_pkt_id(self) -> int:
        pkt_id = self._pkt_counter
        self._pkt_counter += 1
        return pkt_id

    def broadcast_control(self, sender, pkt, size, kind, detail) -> None:
        pkt_id = self._next_pkt_id()
        self.trace("s", sender, "RTR", kind, pkt_id, size, detail)
        self.accounting.control_sent(kind)
        for receiver in self.neighbors(sender):
            self._ship(sender, receiver, None, pkt, kind, pkt_id, size)

    def unicast_control(self, sender, receiver, pkt, size, kind, detail) -> None:
        pkt_id = self._next_pkt_id()
        self.trace("s", sender, "RTR", kind, pkt_id, size, detail)
        self.accounting.control_sent(kind)
        if receiver not in self.adjacency[sender]:
            self.trace("d", sender, "RTR", kind, pkt_id, size, DROP_LINK)
            return
        self._ship(sender, receiver, None, pkt, kind, pkt_id, size)

    def send_data(self, sender: int, next_hop: int, packet: DataPacket) -> None:
        if next_hop not in self.adjacency[sender]:
            self.drop_data(sender, packet, "link-down-in-flight")
            return
        if sender != packet.src:
            self.trace(
                "f", sender, "RTR", "cbr", packet.pkt_id, packet.size,
                f"{packet.src}>{packet.dst}",
            )
        packet.hops_traversed += 1
        self._ship(sender, next_hop, packet, None, "cbr", packet.pkt_id, packet.size)

    def _data_arrived(
        self, packet: DataPacket, sender: int, receiver: int, now: int
    ) -> None:
        if receiver == packet.dst:
            self.accounting.packet_delivered(packet, now)
            self.trace(
                "r", receiver, "AGT", "cbr", packet.pkt_id, packet.size,
                f"{packet.src}>{packet.dst}",
            )
            return
        packet.ttl -= 1
        if packet.ttl <= 0:
            self.drop_data(receiver, packet, "ttl")
            return
        self.protocols[receiver].forward_data(packet, sender, now)

    # -- traffic ---------------------------------------------------------------

    def _emit(self, flow, seq_no: int, now: int) -> None:
        packet = DataPacket(
            pkt_id=self._next_pkt_id(),
            flow_id=flow.flow_id,
            seq_no=seq_no,
            src=flow.src,
            dst=flow.dst,
            size=flow.packet_size,
            sent_at=now,
            ttl=self._node_count,
        )
        self.accounting.packet_sent(packet)
        self.trace(
            "s", flow.src, "AGT", "cbr", packet.pkt_id, packet.size,
            f"{flow.src}>{flow.dst}",
        )
        self.protocols[flow.src].originate_data(packet, now)

    def drop_data(self, node: int, packet: DataPacket, reason: str) -> None:
        self.accounting.packet_dropped(packet, reason)
        self.trace(
            "d", node, "RTR", "cbr", packet.pkt_id, packet.size,
            _DROP_TOKENS[reason],
        )

    # -- bookkeeping -------------------------------------------------------------

    def trace(self, action, node, layer, kind, pkt_id, size, detail) -> None:
        self.tracer.emit(
            TraceRecord(
                action=action,
                time=self.engine.clock,
                node=node,
                layer=layer,
                pkt_kind=kind,
                pkt_id=pkt_id,
                size=size,
                detail=detail,
            )
        )

    def note_route(self, node: int, dest: int, next_hop: Optional[int]) -> None:
        self.route_log.append((self.engine.clock, node, dest, next_hop))
        self.routing_generation += 1


def run_scenario(
    scenario: Scenario,
    trace_stream: IO[str] | None = None,
    after_event: Optional[Callable] = None,
    record_dispatches: bool = False,
) -> RunResult:
    sim = Simulation(
        scenario, trace_stream=trace_stream, record_dispatches=record_dispatches
    )
    return sim.run(after_event=after_event)
