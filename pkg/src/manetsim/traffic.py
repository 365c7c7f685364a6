"""CBR traffic, end-to-end accounting, and throughput binning."""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import US_PER_S

DROP_REASONS = ("no-route", "ttl", "buffer-overflow", "link-down-in-flight", "end-of-run")


@dataclass(frozen=True)
class Flow:
    flow_id: int
    src: int
    dst: int
    start_at: int        # microseconds
    stop_at: int
    packet_size: int     # bytes
    rate: int            # bits/second

    def emission_times(self) -> list[int]:
        """start + k*interval for all k with time < stop, exact integer math."""
        times = []
        k = 0
        bits = self.packet_size * 8
        while True:
            t = self.start_at + (k * bits * US_PER_S) // self.rate
            if t >= self.stop_at:
                return times
            times.append(t)
            k += 1


@dataclass
class DataPacket:
    pkt_id: int          # globally unique within a run
    flow_id: int
    seq_no: int          # per-flow
    src: int
    dst: int
    size: int            # bytes
    sent_at: int
    ttl: int
    hops_traversed: int = 0


@dataclass
class RunSummary:
    sent: int
    delivered: int
    dropped: dict[str, int]
    control_packets: dict[str, int]
    delivery_ratio: float
    mean_hops: float

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())


class DoubleAccounting(Exception):
    """A packet was given two fates; indicates a simulator bug."""


class Accounting:
    """Tracks the single fate of every data packet plus control counts."""

    def __init__(self):
        self.sent = 0
        self.delivered = 0
        self.dropped: dict[str, int] = {}
        self.control: dict[str, int] = {}
        self.hop_sum = 0
        self.deliveries: list[tuple[int, int]] = []   # (time_us, size_bytes)
        self._outstanding: dict[int, DataPacket] = {}
        self._fated: set[int] = set()

    def packet_sent(self, packet: DataPacket) -> None:
        if packet.pkt_id in self._outstanding or packet.pkt_id in self._fated:
            raise DoubleAccounting(f"packet {packet.pkt_id} sent twice")
        self.sent += 1
        self._outstanding[packet.pkt_id] = packet

    def packet_delivered(self, packet: DataPacket, now: int) -> None:
        self._settle(packet)
        self.delivered += 1
        self.hop_sum += packet.hops_traversed
        self.deliveries.append((now, packet.size))

    def packet_dropped(self, packet: DataPacket, reason: str) -> None:
        if reason not in DROP_REASONS:
            raise ValueError(f"unknown drop reason {reason!r}")
        self._settle(packet)
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    def _settle(self, packet: DataPacket) -> None:
        if packet.pkt_id in self._fated:
            raise DoubleAccounting(f"packet {packet.pkt_id} accounted twice")
        if packet.pkt_id not in self._outstanding:
            raise DoubleAccounting(f"packet {packet.pkt_id} was never sent")
        del self._outstanding[packet.pkt_id]
        self._fated.add(packet.pkt_id)

    def control_sent(self, kind: str) -> None:
        self.control[kind] = self.control.get(kind, 0) + 1

    def unaccounted(self) -> list[DataPacket]:
        """Packets still without a fate (buffered or in flight)."""
        return sorted(self._outstanding.values(), key=lambda p: p.pkt_id)

    def summary(self) -> RunSummary:
        total_dropped = sum(self.dropped.values())
        if self.sent != self.delivered + total_dropped:
            raise DoubleAccounting(
                f"conservation violated: sent={self.sent} "
                f"delivered={self.delivered} dropped={total_dropped}"
            )
        return RunSummary(
            sent=self.sent,
            delivered=self.delivered,
            dropped=dict(self.dropped),
            control_packets=dict(self.control),
            delivery_ratio=(self.delivered / self.sent) if self.sent else 0.0,
            mean_hops=(self.hop_sum / self.delivered) if self.delivered else 0.0,
        )


@dataclass
class ThroughputSeries:
    bin_width: int                      # microseconds
    bins: list[tuple[int, int]] = field(default_factory=list)  # (t_start_us, bits)

    def total_bits(self) -> int:
        return sum(bits for _, bits in self.bins)


def throughput_series(
    deliveries: list[tuple[int, int]], bin_width_us: int, end_us: int
) -> ThroughputSeries:
    """Delivered bits summed into half-open bins [t, t+w) covering [0, end)."""
    if bin_width_us <= 0:
        raise ValueError("bin width must be positive")
    n_bins = max(1, -(-end_us // bin_width_us))  # ceil
    bits = [0] * n_bins
    for t_us, size_bytes in deliveries:
        idx = min(t_us // bin_width_us, n_bins - 1)
        bits[idx] += size_bytes * 8
    return ThroughputSeries(
        bin_width=bin_width_us,
        bins=[(i * bin_width_us, bits[i]) for i in range(n_bins)],
    )
