"""Command-line front end: ``uavnet {plan,run,compare,verify,list}``.

Scenario arguments accept a path or the name of a bundled scenario.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as sio
from .harness import Comparison, central_plan, compare, replay, run
from .planner import PlanningError, evaluate

EXIT_OK = 0
EXIT_USAGE = 2  # argparse's own code
EXIT_INVALID = 3
EXIT_PLANNING = 4
EXIT_BUDGET = 5
EXIT_IO = 6
EXIT_REPLAY = 7


def _load(arg: str, mode: str | None = None):
    sc = sio.load_scenario(arg)
    return sc.with_mode(mode) if mode else sc


def _write(path: str, text: str) -> None:
    Path(path).write_text(text)


def cmd_plan(args) -> int:
    sc = _load(args.scenario, args.mode)
    plan = central_plan(sc)
    m = evaluate(sc.world, sc.initial("network"), plan, goal=sc.goal) if sc.goal else None
    print(f"# {sc.name} ({sc.mode}), horizon {plan.horizon}")
    if plan.horizon:
        print(plan.describe())
    if m is not None:
        print(f"mission_length={m.mission_length} total_staleness={m.total_staleness} delivered={m.delivered_count}")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = _load(args.scenario, args.mode)
    trace = run(sc)
    m = trace.metrics
    print(f"# {sc.name} ({sc.mode}), {len(trace.steps)} steps")
    for u, ds in sorted(trace.diagnoses.items()):
        for d in ds:
            print(f"{u} step {d.step}: diagnosis {d.explanation}")
    for u, steps in sorted(trace.replans.items()):
        if steps:
            print(f"{u} replanned at steps {', '.join(map(str, steps))}")
    for u, msg in sorted(trace.faults.items()):
        print(f"{u} halted: {msg}")
    print(f"mission_length={m.mission_length} total_staleness={m.total_staleness} delivered={m.delivered_count}")
    if args.trace:
        _write(args.trace, sio.dumps_trace(trace))
    if args.csv:
        _write(args.csv, sio.trace_csv(sc.world, trace))
    return EXIT_OK if m.delivered_count == len(sc.targets) else EXIT_BUDGET


def format_comparison(c: Comparison) -> str:
    rows = [("network_aware", c.aware), ("network_unaware", c.unaware)]
    lines = [f"{'mode':<16} {'mission_length':>14} {'total_staleness':>15} {'delivered':>9}"]
    for mode, m in rows:
        lines.append(f"{mode:<16} {m.mission_length:>14} {m.total_staleness:>15} {m.delivered_count:>9}")
    lines.append(f"length reduction {c.length_reduction:.1f}%  staleness reduction {c.staleness_reduction:.1f}%")
    return "\n".join(lines)


def cmd_compare(args) -> int:
    sc = _load(args.scenario)
    c, _, _ = compare(sc)
    print(format_comparison(c))
    if args.csv:
        _write(args.csv, sio.comparison_csv([("network_aware", c.aware), ("network_unaware", c.unaware)]))
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = _load(args.scenario)
    trace = sio.loads_trace(Path(args.trace).read_text())
    sc = sc.with_mode(trace.mode)
    problems = replay(sc, trace)
    for p in problems:
        print(p)
    if problems:
        return EXIT_REPLAY
    m = trace.metrics
    print(f"replay ok: mission_length={m.mission_length} total_staleness={m.total_staleness} "
          f"delivered={m.delivered_count}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in sio.BUNDLED:
        sc = sio.load_scenario(name)
        print(f"{name:<10} {len(sc.world.uav_ids)} UAVs, {len(sc.world.targets)} targets, "
              f"{len(sc.exo_script)} scripted events")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavnet", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    modes = ["network_aware", "network_unaware"]

    p = sub.add_parser("plan", help="print the central mission plan and its projected metrics")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=modes)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="simulate the agents and report metrics")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--trace", metavar="OUT.json")
    p.add_argument("--csv", metavar="OUT.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="network-aware vs network-unaware metrics")
    p.add_argument("scenario")
    p.add_argument("--csv", metavar="OUT.csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="replay a recorded trace against its scenario")
    p.add_argument("trace")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except sio.ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except (OSError, KeyError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
