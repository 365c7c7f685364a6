"""Shared test utilities: oracles and scenario generators."""

from __future__ import annotations

import math
import random

from manetsim import Flow, Leg, Position, Scenario, Simulation, WaypointSchedule
from manetsim.engine import us_from_s

INF = math.inf


def bfs_distances(adjacency: dict[int, set[int]], src: int) -> dict[int, float]:
    """Hop counts from src; INF for unreachable nodes."""
    dist = {n: INF for n in adjacency}
    dist[src] = 0
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adjacency[u]:
                if dist[v] == INF:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def adjacency_at(sim: Simulation) -> dict[int, set[int]]:
    return {n: set(peers) for n, peers in sim.adjacency.items()}


def static_scenario(
    positions: dict[int, tuple[float, float]],
    protocol: str,
    radio_range: float,
    duration_s: float,
    flows: list[Flow] | None = None,
    seed: int = 1,
    params: dict | None = None,
) -> Scenario:
    schedules = {
        n: WaypointSchedule(n, Position(x, y)) for n, (x, y) in positions.items()
    }
    return Scenario(
        protocol=protocol,
        duration=us_from_s(duration_s),
        seed=seed,
        radio_range=radio_range,
        schedules=schedules,
        flows=list(flows or []),
        params=dict(params or {}),
    )


def line_positions(n: int, spacing: float = 100.0) -> dict[int, tuple[float, float]]:
    return {i: (i * spacing, 0.0) for i in range(n)}


def random_waypoint_scenario(
    rng: random.Random,
    protocol: str,
    duration_s: float = 25.0,
    params: dict | None = None,
) -> Scenario:
    """5-8 nodes wandering over a 500m square with a few CBR flows."""
    n = rng.randint(5, 8)
    area = 500.0
    schedules = {}
    for node in range(n):
        initial = Position(rng.uniform(0, area), rng.uniform(0, area))
        pos = initial
        legs = []
        t = 0.0
        for _ in range(rng.randint(0, 3)):
            depart = t + rng.uniform(0.5, 8.0)
            dest = Position(rng.uniform(0, area), rng.uniform(0, area))
            speed = rng.uniform(1.0, 15.0)
            arrive = depart + pos.distance_to(dest) / speed
            legs.append(Leg(us_from_s(depart), dest, speed))
            pos, t = dest, arrive
            if t > duration_s:
                break
        schedules[node] = WaypointSchedule(node, initial, legs)
    flows = []
    for flow_id in range(rng.randint(1, 3)):
        src = rng.randrange(n)
        dst = rng.randrange(n)
        while dst == src:
            dst = rng.randrange(n)
        start = rng.uniform(0.5, 4.0)
        flows.append(
            Flow(flow_id, src, dst, us_from_s(start), us_from_s(duration_s),
                 packet_size=256, rate=4096)   # one packet every 0.5 s
        )
    merged = {"dsdv.periodic_interval": 5.0}
    merged.update(params or {})
    return Scenario(
        protocol=protocol,
        duration=us_from_s(duration_s),
        seed=rng.getrandbits(63),
        radio_range=rng.uniform(150.0, 260.0),
        schedules=schedules,
        flows=flows,
        params=merged,
    )


def random_connected_positions(
    rng: random.Random, n: int, radio_range: float, area: float = 400.0
) -> dict[int, tuple[float, float]]:
    """Static positions whose disk graph is connected (rejection sampled)."""
    while True:
        positions = {
            i: (rng.uniform(0, area), rng.uniform(0, area)) for i in range(n)
        }
        adj = {i: set() for i in range(n)}
        for i in range(n):
            for j in range(i + 1, n):
                dx = positions[i][0] - positions[j][0]
                dy = positions[i][1] - positions[j][1]
                if dx * dx + dy * dy <= radio_range * radio_range:
                    adj[i].add(j)
                    adj[j].add(i)
        if all(d != INF for d in bfs_distances(adj, 0).values()):
            return positions


# -- loop-freedom walkers -------------------------------------------------


def assert_dsdv_loop_free(sim: Simulation) -> None:
    """Walk next hops per destination; the (seq, metric) certificate must
    strictly improve along every step, so no node can repeat."""
    protos = sim.protocols
    nodes = sorted(protos)
    for dest in nodes:
        cleared: set[int] = set()
        for start in nodes:
            path: list[int] = []
            on_path: set[int] = set()
            cur = start
            while cur != dest and cur not in cleared:
                if cur in on_path:
                    raise AssertionError(
                        f"routing loop toward {dest}: {path + [cur]}"
                    )
                entry = protos[cur].table.get(dest)
                if entry is None or entry.metric == INF:
                    break
                nxt = entry.next_hop
                if nxt != dest:
                    nentry = protos[nxt].table.get(dest)
                    if nentry is not None and nentry.metric != INF:
                        improving = nentry.dest_seq > entry.dest_seq or (
                            nentry.dest_seq == entry.dest_seq
                            and nentry.metric < entry.metric
                        )
                        if not improving:
                            raise AssertionError(
                                f"certificate violated toward {dest} at "
                                f"{cur}->{nxt}: ({entry.dest_seq},{entry.metric})"
                                f" -> ({nentry.dest_seq},{nentry.metric})"
                            )
                path.append(cur)
                on_path.add(cur)
                cur = nxt
            cleared.update(path)


def assert_aodv_loop_free(sim: Simulation) -> None:
    """Per-destination forwarding graph (all alternate paths) is acyclic,
    next hops within an entry are distinct, and no path exceeds the
    entry's advertised hop count."""
    protos = sim.protocols
    now = sim.engine.clock
    nodes = sorted(protos)
    dests = {d for p in protos.values() for d in p.table}
    for dest in sorted(dests):
        edges: dict[int, list[int]] = {}
        for node in nodes:
            entry = protos[node].table.get(dest)
            if entry is None or not entry.paths or now > entry.expires_at:
                continue
            hops = [p.next_hop for p in entry.paths]
            if len(set(hops)) != len(hops):
                raise AssertionError(
                    f"duplicate next hops at {node} toward {dest}: {hops}"
                )
            for p in entry.paths:
                if p.hops > entry.advertised_hops:
                    raise AssertionError(
                        f"path {p} at {node} toward {dest} exceeds "
                        f"advertised {entry.advertised_hops}"
                    )
            edges[node] = hops
        color: dict[int, int] = {}   # 1 = in progress, 2 = done

        def visit(u: int, stack: list[int]) -> None:
            color[u] = 1
            for v in edges.get(u, ()):  # dest itself has no outgoing edges
                if v == dest:
                    continue
                if color.get(v) == 1:
                    raise AssertionError(
                        f"forwarding cycle toward {dest}: {stack + [u, v]}"
                    )
                if color.get(v, 0) == 0:
                    visit(v, stack + [u])
            color[u] = 2

        for node in edges:
            if color.get(node, 0) == 0:
                visit(node, [])


def loop_free_watcher(sim: Simulation):
    """after_event callback asserting loop freedom whenever routing changed."""
    check = (
        assert_dsdv_loop_free
        if sim.scenario.protocol == "dsdv"
        else assert_aodv_loop_free
    )
    state = {"generation": -1}

    def watch(event) -> None:
        if sim.routing_generation != state["generation"]:
            state["generation"] = sim.routing_generation
            check(sim)

    return watch
