"""Command-line front end: run, validate, and compare scenarios.

Exit codes: 0 success, 2 scenario/usage error, 1 internal error.
Artifacts are written to a temporary name and renamed into place, so a
failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import io
import os
import sys

from .engine import s_from_us, us_from_s
from .network import run_scenario
from .scenario import ScenarioError, apply_overrides, load_scenario
from .trace import emit_compare_data, emit_plot_data

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_SCENARIO = 2


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key or not value:
            raise ScenarioError(f"override must look like key=value, got {pair!r}")
        overrides[key] = value
    return overrides


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _summary_lines(summary) -> list[str]:
    lines = [
        f"sent={summary.sent}",
        f"delivered={summary.delivered}",
        f"delivery_ratio={summary.delivery_ratio:.6f}",
        f"mean_hops={summary.mean_hops:.6f}",
    ]
    for reason in sorted(summary.dropped):
        lines.append(f"dropped.{reason}={summary.dropped[reason]}")
    for kind in sorted(summary.control_packets):
        lines.append(f"control.{kind}={summary.control_packets[kind]}")
    return lines


def _load(path: str, overrides: dict[str, str]):
    scenario = load_scenario(path)
    return apply_overrides(scenario, overrides)


def cmd_run(args) -> int:
    scenario = _load(args.scenario, _parse_overrides(args.set))
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    os.makedirs(args.out_dir, exist_ok=True)

    buffer = io.StringIO()
    result = run_scenario(scenario, trace_stream=buffer)
    series = result.series(us_from_s(args.bin_width))

    _write_atomic(os.path.join(args.out_dir, stem + ".tr"), buffer.getvalue())
    _write_atomic(
        os.path.join(args.out_dir, stem + ".dat"),
        emit_plot_data(series.bins, series.bin_width),
    )
    _write_atomic(
        os.path.join(args.out_dir, stem + ".sum"),
        "\n".join(_summary_lines(result.summary)) + "\n",
    )

    print(f"{stem}: {result.dispatched} events over "
          f"{s_from_us(scenario.duration):g}s")
    for line in _summary_lines(result.summary):
        print("  " + line)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    from .mobility import Topology

    events = Topology(scenario.schedules).connectivity_events(
        scenario.radio_range, scenario.duration
    )
    print(
        f"{scenario.node_count} nodes, {len(scenario.flows)} "
        f"flow{'s' if len(scenario.flows) != 1 else ''}, "
        f"{len(events)} link events"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    overrides = _parse_overrides(args.set)
    results = []
    for path in (args.scenario_a, args.scenario_b):
        try:
            scenario = _load(path, overrides)
            results.append(run_scenario(scenario))
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    os.makedirs(args.out_dir, exist_ok=True)

    width = us_from_s(args.bin_width)
    series = [r.series(width) for r in results]
    _write_atomic(
        os.path.join(args.out_dir, "compare.dat"),
        emit_compare_data(series[0].bins, series[1].bins),
    )

    names = [os.path.splitext(os.path.basename(p))[0]
             for p in (args.scenario_a, args.scenario_b)]
    lines = [f"# {names[0]} vs {names[1]}"]
    table_a = dict(kv.split("=") for kv in _summary_lines(results[0].summary))
    table_b = dict(kv.split("=") for kv in _summary_lines(results[1].summary))
    for key in sorted(set(table_a) | set(table_b)):
        lines.append(f"{key} {table_a.get(key, '0')} {table_b.get(key, '0')}")
    text = "\n".join(lines) + "\n"
    _write_atomic(os.path.join(args.out_dir, "compare.sum"), text)
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Discrete-event MANET routing simulator (DSDV, AODV)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("-o", "--out-dir", default=".")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--bin-width", type=float, default=1.0)
    p_run.set_defaults(fn=cmd_run)

    p_val = sub.add_parser("validate", help="parse and dry-check a scenario")
    p_val.add_argument("scenario")
    p_val.set_defaults(fn=cmd_validate)

    p_cmp = sub.add_parser("compare", help="run two scenarios side by side")
    p_cmp.add_argument("scenario_a")
    p_cmp.add_argument("scenario_b")
    p_cmp.add_argument("-o", "--out-dir", default=".")
    p_cmp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_cmp.add_argument("--bin-width", type=float, default=1.0)
    p_cmp.set_defaults(fn=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
