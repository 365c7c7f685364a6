"""Bit-exact trace records and plot-data output.

One record per line, space separated, fixed field order:

    <action> <time> <node> <layer> <pkt_kind> <pkt_id> <size> <detail>

action is s/r/d/f, time is decimal seconds with exactly six places,
layer is AGT (application) or RTR (routing), and detail is a single
token: "src>dst" for data and discovery packets, a drop reason, or a
DSDV update kind.  read_line(write_line(r)) is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

from .engine import US_PER_S, format_time

ACTIONS = ("s", "r", "d", "f")
LAYERS = ("AGT", "RTR")
PKT_KINDS = ("cbr", "rreq", "rrep", "rerr", "dsdv")

# Drop reason tokens used in the detail field.
DROP_NO_ROUTE = "NRTE"
DROP_TTL = "TTL"
DROP_BUFFER = "OVFL"
DROP_LINK = "LINK"
DROP_END = "END"
DROP_DUPLICATE = "DUP"
DROP_STALE = "STALE"
DROP_NO_REVERSE = "NOREV"


class MalformedTraceLine(Exception):
    pass


@dataclass(frozen=True)
class TraceRecord:
    action: str
    time: int            # microseconds
    node: int
    layer: str
    pkt_kind: str
    pkt_id: int
    size: int
    detail: str


def write_line(record: TraceRecord) -> str:
    return (
        f"{record.action} {format_time(record.time)} {record.node} "
        f"{record.layer} {record.pkt_kind} {record.pkt_id} "
        f"{record.size} {record.detail}"
    )


def read_line(line: str) -> TraceRecord:
    parts = line.rstrip("\n").split(" ")
    if len(parts) != 8:
        raise MalformedTraceLine(f"expected 8 fields, got {len(parts)}: {line!r}")
    action, time_s, node, layer, pkt_kind, pkt_id, size, detail = parts
    if action not in ACTIONS:
        raise MalformedTraceLine(f"bad action {action!r}")
    if layer not in LAYERS:
        raise MalformedTraceLine(f"bad layer {layer!r}")
    if pkt_kind not in PKT_KINDS:
        raise MalformedTraceLine(f"bad packet kind {pkt_kind!r}")
    whole, _, frac = time_s.partition(".")
    if len(frac) != 6 or not whole.isdigit() or not frac.isdigit():
        raise MalformedTraceLine(f"bad time {time_s!r}")
    try:
        return TraceRecord(
            action=action,
            time=int(whole) * US_PER_S + int(frac),
            node=int(node),
            layer=layer,
            pkt_kind=pkt_kind,
            pkt_id=int(pkt_id),
            size=int(size),
            detail=detail,
        )
    except ValueError as exc:
        raise MalformedTraceLine(str(exc)) from None


class TraceWriter:
    """Appends records in dispatch order; also keeps them in memory."""

    def __init__(self, stream: IO[str] | None = None):
        self._stream = stream
        self.records: list[TraceRecord] = []

    def emit(self, record: TraceRecord) -> None:
        self.records.append(record)
        if self._stream is not None:
            self._stream.write(write_line(record) + "\n")

    def text(self) -> str:
        return "".join(write_line(r) + "\n" for r in self.records)


def emit_plot_data(bins: Iterable[tuple[int, int]], bin_width_us: int) -> str:
    """Two-column `time value` text for a throughput series."""
    lines = ["# time delivered_bits"]
    for t_start, bits in bins:
        lines.append(f"{t_start / US_PER_S} {bits}")
    return "\n".join(lines) + "\n"


def emit_compare_data(
    bins_a: list[tuple[int, int]], bins_b: list[tuple[int, int]]
) -> str:
    """Three-column overlay; the shorter series is padded with zeros."""
    lines = ["# time a_bits b_bits"]
    n = max(len(bins_a), len(bins_b))
    for i in range(n):
        if i < len(bins_a):
            t = bins_a[i][0]
        else:
            t = bins_b[i][0]
        a = bins_a[i][1] if i < len(bins_a) else 0
        b = bins_b[i][1] if i < len(bins_b) else 0
        lines.append(f"{t / US_PER_S} {a} {b}")
    return "\n".join(lines) + "\n"
