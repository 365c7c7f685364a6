"""Deterministic discrete-event simulator for MANET routing protocols."""

from .engine import (
    EventHandle,
    SchedulingInPast,
    Simulator,
    format_time,
    s_from_us,
    us_from_s,
)
from .mobility import (
    Leg,
    LinkEvent,
    Position,
    Topology,
    UnknownNode,
    WaypointSchedule,
)
from .network import RunResult, Simulation, run_scenario
from .rng import RngStream
from .scenario import (
    BadParameter,
    DuplicateNode,
    Scenario,
    ScenarioError,
    ScenarioSyntaxError,
    UndeclaredNode,
    UnknownDirective,
    apply_overrides,
    load_scenario,
    parse_scenario,
)
from .trace import (
    MalformedTraceLine,
    TraceRecord,
    TraceWriter,
    emit_plot_data,
    read_line,
    write_line,
)
from .traffic import (
    Accounting,
    DataPacket,
    DoubleAccounting,
    Flow,
    RunSummary,
    ThroughputSeries,
    throughput_series,
)

__version__ = "0.1.0"

__all__ = [
    "Accounting",
    "BadParameter",
    "DataPacket",
    "DoubleAccounting",
    "DuplicateNode",
    "EventHandle",
    "Flow",
    "Leg",
    "LinkEvent",
    "MalformedTraceLine",
    "Position",
    "RngStream",
    "RunResult",
    "RunSummary",
    "Scenario",
    "ScenarioError",
    "ScenarioSyntaxError",
    "SchedulingInPast",
    "Simulation",
    "Simulator",
    "ThroughputSeries",
    "Topology",
    "TraceRecord",
    "TraceWriter",
    "UndeclaredNode",
    "UnknownDirective",
    "UnknownNode",
    "WaypointSchedule",
    "apply_overrides",
    "emit_plot_data",
    "format_time",
    "load_scenario",
    "parse_scenario",
    "read_line",
    "run_scenario",
    "s_from_us",
    "throughput_series",
    "us_from_s",
    "write_line",
]
