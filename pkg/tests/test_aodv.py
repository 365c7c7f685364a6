from manetsim import Flow, Simulation, run_scenario
from manetsim.engine import us_from_s

from helpers import static_scenario


def one_shot_flow(flow_id, src, dst, start_s, size=512):
    # rate chosen so exactly one packet is emitted
    return Flow(flow_id, src, dst, us_from_s(start_s), us_from_s(start_s + 0.5),
                size, 4096)


def cbr_flow(flow_id, src, dst, start_s, stop_s, interval_s, size=512):
    return Flow(flow_id, src, dst, us_from_s(start_s), us_from_s(stop_s),
                size, round(size * 8 / interval_s))


def rreq_floods(result, origin):
    """Number of discovery attempts originated by `origin`."""
    return sum(
        1 for r in result.tracer.records
        if r.action == "s" and r.pkt_kind == "rreq" and r.node == origin
    )


LINE3 = {4: (0.0, 0.0), 3: (150.0, 0.0), 1: (300.0, 0.0)}


def test_three_node_line_discovery():
    scenario = static_scenario(
        LINE3, "aodv", radio_range=200.0, duration_s=5.0,
        flows=[one_shot_flow(0, 4, 1, 1.0)],
    )
    sim = Simulation(scenario)
    result = sim.run()
    assert result.summary.delivered == 1
    assert result.summary.mean_hops == 2.0

    # origin installed a 2-hop route via the middle node
    entry = sim.protocols[4].table[1]
    assert entry.paths[0].next_hop == 3
    assert entry.paths[0].hops == 2

    # the destination replied exactly once
    rreps_from_dest = [
        r for r in result.tracer.records
        if r.action == "s" and r.pkt_kind == "rrep" and r.node == 1
    ]
    assert len(rreps_from_dest) == 1

    # the intermediate forwarded the reply and gained its own route
    assert sim.protocols[3].table[1].paths[0].next_hop == 1
    assert sim.protocols[3].table[1].paths[0].hops == 1

    # flooded copies echoed back were discarded as duplicates
    dups = [
        r for r in result.tracer.records
        if r.action == "d" and r.pkt_kind == "rreq" and r.detail == "DUP"
    ]
    assert dups


def test_valid_route_suppresses_further_rreqs():
    scenario = static_scenario(
        LINE3, "aodv", radio_range=200.0, duration_s=10.0,
        flows=[cbr_flow(0, 4, 1, 1.0, 9.0, interval_s=1.0)],
    )
    result = run_scenario(scenario)
    assert rreq_floods(result, 4) == 1           # refreshed by steady traffic
    assert result.summary.delivered == 8


def test_idle_route_expires_and_rediscovers():
    scenario = static_scenario(
        LINE3, "aodv", radio_range=200.0, duration_s=10.0,
        flows=[one_shot_flow(0, 4, 1, 1.0), one_shot_flow(1, 4, 1, 8.0)],
    )
    result = run_scenario(scenario)
    assert rreq_floods(result, 4) == 2           # 3 s timeout elapsed in between
    assert result.summary.delivered == 2


def test_low_timeout_causes_periodic_rediscovery():
    scenario = static_scenario(
        LINE3, "aodv", radio_range=200.0, duration_s=10.0,
        flows=[cbr_flow(0, 4, 1, 1.0, 9.0, interval_s=1.0)],
        params={"aodv.active_route_timeout": 0.5},
    )
    result = run_scenario(scenario)
    assert rreq_floods(result, 4) >= 7           # nearly every packet re-discovers
    assert result.summary.delivered == 8         # but every packet still arrives


def test_failed_discovery_exhausts_retries_and_drops():
    positions = {0: (0.0, 0.0), 1: (10_000.0, 0.0)}
    scenario = static_scenario(
        positions, "aodv", radio_range=150.0, duration_s=10.0,
        flows=[one_shot_flow(0, 0, 1, 1.0)],
    )
    result = run_scenario(scenario)
    assert result.summary.delivered == 0
    assert result.summary.dropped == {"no-route": 1}
    assert rreq_floods(result, 0) == 3           # first attempt + 2 retries


def test_buffer_overflow_drops_oldest():
    positions = {0: (0.0, 0.0), 1: (10_000.0, 0.0)}
    scenario = static_scenario(
        positions, "aodv", radio_range=150.0, duration_s=10.0,
        flows=[cbr_flow(0, 0, 1, 1.0, 3.0, interval_s=0.1)],
        params={"aodv.buffer_capacity": 4},
    )
    result = run_scenario(scenario)
    drops = [
        r for r in result.tracer.records if r.action == "d" and r.pkt_kind == "cbr"
    ]
    overflow = [r for r in drops if r.detail == "OVFL"]
    assert overflow
    # oldest first: every overflow drop precedes the final no-route flush
    nrte = [r for r in drops if r.detail == "NRTE"]
    assert nrte and overflow[0].pkt_id < nrte[0].pkt_id
    assert result.summary.sent == result.summary.delivered + result.summary.total_dropped


def test_break_without_upstream_users_sends_no_rerr():
    positions = {0: (0.0, 0.0), 1: (100.0, 0.0)}
    scenario = static_scenario(
        positions, "aodv", radio_range=150.0, duration_s=10.0,
        flows=[one_shot_flow(0, 0, 1, 1.0)],
    )
    sim = Simulation(scenario)
    # sever the link after the exchange completes
    sim.engine.schedule(
        us_from_s(3.0), "link-change",
        lambda now: sim._apply_link_event(
            type("E", (), {"a": 0, "b": 1, "kind": "down"})(), now
        ),
    )
    result = sim.run()
    assert result.summary.control_packets.get("rerr", 0) == 0
    assert sim.protocols[0].table[1].paths == []


def test_rerr_notifies_upstream_and_source_rediscovers():
    # chain 0-1-2; the 1-2 link dies mid-flow, then comes back
    positions = {0: (0.0, 0.0), 1: (100.0, 0.0), 2: (200.0, 0.0)}
    scenario = static_scenario(
        positions, "aodv", radio_range=120.0, duration_s=12.0,
        flows=[cbr_flow(0, 0, 2, 1.0, 11.0, interval_s=0.5)],
    )
    sim = Simulation(scenario)
    for t, kind in ((4.0, "down"), (6.0, "up")):
        sim.engine.schedule(
            us_from_s(t), "link-change",
            lambda now, k=kind: sim._apply_link_event(
                type("E", (), {"a": 1, "b": 2, "kind": k})(), now
            ),
        )
    result = sim.run()
    assert result.summary.control_packets.get("rerr", 0) >= 1
    assert rreq_floods(result, 0) >= 2           # initial + post-repair discovery
    # deliveries resume after the link returns
    assert max(t for t, _ in result.deliveries) > us_from_s(6.0)


DIAMOND = {4: (0.0, 0.0), 3: (100.0, 90.0), 0: (100.0, -90.0), 1: (200.0, 0.0)}


def test_multipath_diamond_installs_two_next_hops():
    scenario = static_scenario(
        DIAMOND, "aodv", radio_range=150.0, duration_s=5.0,
        flows=[one_shot_flow(0, 4, 1, 1.0)],
        params={"aodv.multipath": True},
    )
    sim = Simulation(scenario)
    sim.run()
    entry = sim.protocols[4].table[1]
    assert sorted(entry.next_hops()) == [0, 3]
    assert all(p.hops == 2 for p in entry.paths)
    assert len({p.next_hop for p in entry.paths}) == 2
    seqs = {p.hops <= entry.advertised_hops for p in entry.paths}
    assert seqs == {True}


def test_singlepath_diamond_keeps_one_entry():
    scenario = static_scenario(
        DIAMOND, "aodv", radio_range=150.0, duration_s=5.0,
        flows=[one_shot_flow(0, 4, 1, 1.0)],
    )
    sim = Simulation(scenario)
    sim.run()
    assert len(sim.protocols[4].table[1].paths) == 1


def test_multipath_break_switches_without_discovery():
    scenario = static_scenario(
        DIAMOND, "aodv", radio_range=150.0, duration_s=20.0,
        flows=[cbr_flow(0, 4, 1, 1.0, 19.0, interval_s=0.1)],
        params={"aodv.multipath": True, "aodv.active_route_timeout": 60.0},
    )
    sim = Simulation(scenario)
    primary = {}

    def sever_primary(now):
        nh = sim.protocols[4].table[1].paths[0].next_hop
        primary["nh"] = nh
        pair = (min(4, nh), max(4, nh))
        sim._apply_link_event(
            type("E", (), {"a": pair[0], "b": pair[1], "kind": "down"})(), now
        )

    sim.engine.schedule(us_from_s(10.0), "link-change", sever_primary)
    result = sim.run()
    floods = [
        r.time for r in result.tracer.records
        if r.action == "s" and r.pkt_kind == "rreq" and r.node == 4
    ]
    assert len([t for t in floods if t > us_from_s(2.0)]) == 0   # no re-discovery
    # traffic switched to the surviving next hop with a sub-0.1s gap
    deliveries = [t for t, _ in result.deliveries]
    before = max(t for t in deliveries if t < us_from_s(10.0))
    after = min(t for t in deliveries if t > us_from_s(10.0))
    assert after - before < us_from_s(0.2)
    survivor = sim.protocols[4].table[1].paths[0].next_hop
    assert survivor != primary["nh"]


def test_intermediate_rrep_flag():
    line4 = {0: (0.0, 0.0), 1: (100.0, 0.0), 2: (200.0, 0.0), 3: (300.0, 0.0)}
    for flag, expect_node1_reply in ((True, True), (False, False)):
        scenario = static_scenario(
            line4, "aodv", radio_range=120.0, duration_s=8.0,
            flows=[
                cbr_flow(0, 1, 3, 1.0, 7.5, interval_s=0.5),  # keeps 1's route hot
                one_shot_flow(1, 0, 3, 5.0),
            ],
            params={"aodv.intermediate_rrep": flag},
        )
        result = run_scenario(scenario)
        replies_from_middle = [
            r for r in result.tracer.records
            if r.action == "s" and r.pkt_kind == "rrep"
            and r.node == 1 and r.detail == "0>3"
        ]
        assert bool(replies_from_middle) is expect_node1_reply, flag
        assert result.summary.dropped.get("no-route", 0) == 0


def test_duplicate_suppression_bounds_flood_size():
    clique = {i: (float(i * 10), 0.0) for i in range(5)}
    scenario = static_scenario(
        clique, "aodv", radio_range=100.0, duration_s=5.0,
        flows=[one_shot_flow(0, 0, 4, 1.0)],
    )
    result = run_scenario(scenario)
    rreq_sends = [
        r for r in result.tracer.records if r.action == "s" and r.pkt_kind == "rreq"
    ]
    assert len(rreq_sends) <= len(clique)


def test_own_seq_monotone_per_node():
    scenario = static_scenario(
        LINE3, "aodv", radio_range=200.0, duration_s=10.0,
        flows=[one_shot_flow(0, 4, 1, 1.0), one_shot_flow(1, 1, 4, 4.0)],
    )
    sim = Simulation(scenario)
    lows = {n: {} for n in LINE3}

    def watch(event):
        for n, proto in sim.protocols.items():
            for dest, entry in proto.table.items():
                prev = lows[n].get(dest)
                assert prev is None or entry.dest_seq >= prev, (n, dest)
                lows[n][dest] = entry.dest_seq

    sim.run(after_event=watch)
