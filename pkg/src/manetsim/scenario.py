"""Line-oriented scenario files.

One directive per line; `#` starts a comment.  Directives:

    protocol aodv|dsdv
    duration <seconds>
    seed <int>
    range <meters>
    node <id> at <x> <y>
    move <id> from <depart_s> to <x> <y> speed <m/s>
    flow cbr from <src> to <dst> start <s> stop <s> rate <bits/s> size <bytes>
    param <key> <value>

Parse failures never escape as raw exceptions: every failure is a
ScenarioError subclass carrying the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import us_from_s
from .mobility import Leg, Position, WaypointSchedule
from .traffic import Flow


class ScenarioError(Exception):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ScenarioSyntaxError(ScenarioError):
    pass


class UnknownDirective(ScenarioError):
    pass


class UndeclaredNode(ScenarioError):
    pass


class DuplicateNode(ScenarioError):
    pass


class BadParameter(ScenarioError):
    pass


def _bool(text: str) -> bool:
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (converter, default)
PARAMETERS: dict[str, tuple] = {
    "dsdv.periodic_interval": (float, 15.0),
    "dsdv.settling_weight": (float, 0.5),
    "dsdv.settling_factor": (float, 2.0),
    "aodv.active_route_timeout": (float, 3.0),
    "aodv.rreq_retries": (int, 2),
    "aodv.discovery_wait": (float, 1.0),
    "aodv.multipath": (_bool, False),
    "aodv.intermediate_rrep": (_bool, False),
    "aodv.buffer_capacity": (int, 64),
    "net.hop_delay": (float, 0.001),
    "net.jitter": (float, 0.0005),
    "net.drop_prob": (float, 0.0),
}


@dataclass
class Scenario:
    protocol: str
    duration: int                     # microseconds
    seed: int
    radio_range: float
    schedules: dict[int, WaypointSchedule]
    flows: list[Flow]
    params: dict = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.schedules)

    def param(self, key: str):
        if key in self.params:
            return self.params[key]
        return PARAMETERS[key][1]


def apply_overrides(scenario: Scenario, overrides: dict[str, str]) -> Scenario:
    """Apply scalar `key=value` overrides (seed, duration, param keys)."""
    for key, raw in overrides.items():
        try:
            if key == "seed":
                scenario.seed = int(raw)
            elif key == "duration":
                value = float(raw)
                if value <= 0:
                    raise ValueError("must be positive")
                scenario.duration = us_from_s(value)
            elif key in PARAMETERS:
                scenario.params[key] = PARAMETERS[key][0](raw)
            else:
                raise BadParameter(f"unknown override key {key!r}")
        except (ValueError, TypeError) as exc:
            raise BadParameter(f"bad override {key}={raw}: {exc}") from None
    return scenario


def _num(lineno: int, text: str, kind=float, what: str = "number"):
    try:
        return kind(text)
    except ValueError:
        raise ScenarioSyntaxError(f"bad {what}: {text!r}", lineno) from None


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate scenario text."""
    protocol: str | None = None
    duration: int | None = None
    seed = 1
    radio_range = 250.0
    initial: dict[int, Position] = {}
    moves: list[tuple[int, int, Leg]] = []               # (lineno, node, leg)
    flow_specs: list[tuple[int, int, int, int, int, int, int]] = []
    params: dict = {}

    def expect(lineno: int, words: list[str], n: int, usage: str) -> None:
        if len(words) != n:
            raise ScenarioSyntaxError(f"expected `{usage}`", lineno)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]

        if head == "protocol":
            expect(lineno, words, 2, "protocol aodv|dsdv")
            if words[1] not in ("aodv", "dsdv"):
                raise BadParameter(f"unsupported protocol {words[1]!r}", lineno)
            protocol = words[1]

        elif head == "duration":
            expect(lineno, words, 2, "duration <seconds>")
            value = _num(lineno, words[1], float, "duration")
            if value <= 0:
                raise BadParameter("duration must be positive", lineno)
            duration = us_from_s(value)

        elif head == "seed":
            expect(lineno, words, 2, "seed <int>")
            seed = _num(lineno, words[1], int, "seed")

        elif head == "range":
            expect(lineno, words, 2, "range <meters>")
            value = _num(lineno, words[1], float, "range")
            if value <= 0:
                raise BadParameter("range must be positive", lineno)
            radio_range = value

        elif head == "node":
            expect(lineno, words, 5, "node <id> at <x> <y>")
            if words[2] != "at":
                raise ScenarioSyntaxError("expected `node <id> at <x> <y>`", lineno)
            node = _num(lineno, words[1], int, "node id")
            if node < 0:
                raise BadParameter("node ids must be non-negative", lineno)
            if node in initial:
                raise DuplicateNode(f"node {node} declared twice", lineno)
            initial[node] = Position(_num(lineno, words[3]), _num(lineno, words[4]))

        elif head == "move":
            usage = "move <id> from <t> to <x> <y> speed <v>"
            expect(lineno, words, 9, usage)
            if words[2] != "from" or words[4] != "to" or words[7] != "speed":
                raise ScenarioSyntaxError(f"expected `{usage}`", lineno)
            node = _num(lineno, words[1], int, "node id")
            depart = _num(lineno, words[3], float, "depart time")
            if depart < 0:
                raise BadParameter("depart time must be non-negative", lineno)
            dest = Position(_num(lineno, words[5]), _num(lineno, words[6]))
            speed = _num(lineno, words[8], float, "speed")
            if speed <= 0:
                raise BadParameter("speed must be positive", lineno)
            moves.append((lineno, node, Leg(us_from_s(depart), dest, speed)))

        elif head == "flow":
            usage = (
                "flow cbr from <src> to <dst> start <s> stop <s> "
                "rate <bps> size <bytes>"
            )
            expect(lineno, words, 14, usage)
            keywords = (
                words[1], words[2], words[4], words[6],
                words[8], words[10], words[12],
            )
            if keywords != ("cbr", "from", "to", "start", "stop", "rate", "size"):
                raise ScenarioSyntaxError(f"expected `{usage}`", lineno)
            src = _num(lineno, words[3], int, "source node")
            dst = _num(lineno, words[5], int, "destination node")
            start = _num(lineno, words[7], float, "start time")
            stop = _num(lineno, words[9], float, "stop time")
            rate = _num(lineno, words[11], int, "rate")
            size = _num(lineno, words[13], int, "packet size")
            if rate <= 0 or size <= 0:
                raise BadParameter("flow rate and size must be positive", lineno)
            if not start < stop:
                raise BadParameter("flow start must precede stop", lineno)
            flow_specs.append(
                (lineno, src, dst, us_from_s(start), us_from_s(stop), size, rate)
            )

        elif head == "param":
            expect(lineno, words, 3, "param <key> <value>")
            key = words[1]
            if key not in PARAMETERS:
                raise BadParameter(f"unknown parameter key {key!r}", lineno)
            try:
                params[key] = PARAMETERS[key][0](words[2])
            except ValueError as exc:
                raise BadParameter(f"bad value for {key}: {exc}", lineno) from None

        else:
            raise UnknownDirective(f"unknown directive {head!r}", lineno)

    if protocol is None:
        raise BadParameter("missing `protocol` directive")
    if duration is None:
        raise BadParameter("missing `duration` directive")
    if not initial:
        raise BadParameter("scenario declares no nodes")
    if sorted(initial) != list(range(len(initial))):
        raise BadParameter(f"node ids must be dense from 0 (got {sorted(initial)})")

    legs_by_node: dict[int, list[Leg]] = {n: [] for n in initial}
    for lineno, node, leg in moves:
        if node not in initial:
            raise UndeclaredNode(f"move for undeclared node {node}", lineno)
        legs_by_node[node].append(leg)

    schedules: dict[int, WaypointSchedule] = {}
    for node in sorted(initial):
        legs = sorted(legs_by_node[node], key=lambda l: l.depart_at)
        try:
            schedules[node] = WaypointSchedule(node, initial[node], legs)
        except ValueError as exc:
            raise BadParameter(str(exc)) from None

    flows: list[Flow] = []
    for flow_id, (lineno, src, dst, start, stop, size, rate) in enumerate(flow_specs):
        if src not in initial:
            raise UndeclaredNode(f"flow references undeclared node {src}", lineno)
        if dst not in initial:
            raise UndeclaredNode(f"flow references undeclared node {dst}", lineno)
        if src == dst:
            raise BadParameter("flow source equals destination", lineno)
        flows.append(Flow(flow_id, src, dst, start, stop, size, rate))

    return Scenario(
        protocol=protocol,
        duration=duration,
        seed=seed,
        radio_range=radio_range,
        schedules=schedules,
        flows=flows,
        params=params,
    )


def load_scenario(path) -> Scenario:
    """Read and parse a scenario file (UTF-8)."""
    try:
        with open(path, encoding="utf-8", errors="strict") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ScenarioError(f"scenario {path} is not valid UTF-8") from None
    return parse_scenario(text)
