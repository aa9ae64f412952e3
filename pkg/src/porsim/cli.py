"""Command-line surface: run scenarios, check goldens, sweep properties.

Commands:
    porsim run --scenario FILE [--out TRACE] [--timeline FILE] [--horizon-ms N]
    porsim check --scenario FILE --golden FILE [--horizon-ms N]
    porsim properties [--seed N] [--iterations N]

``run`` exits nonzero on scenario errors or invariant violations, ``check``
on a golden mismatch (reporting the first differing line), ``properties``
when any randomized suite finds a counterexample.
"""

from __future__ import annotations

import argparse
import sys

from . import properties as props
from .node import NodeError
from .render import render_timeline
from .scenario import ScenarioError, parse_scenario
from .sim import SimError, SimInvariantError, run


def _load_scenario(path: str, horizon_ms: int | None):
    with open(path, encoding="utf-8") as handle:
        scenario = parse_scenario(handle.read())
    if horizon_ms is not None:
        scenario.horizon_ms = horizon_ms
    return scenario


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _load_scenario(args.scenario, args.horizon_ms)
        result = run(scenario)
    except (ScenarioError, NodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimError, SimInvariantError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    text = result.trace_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    if args.timeline:
        with open(args.timeline, "w", encoding="utf-8") as handle:
            handle.write(render_timeline(result))
    print(f"# events: {len(result.trace)}", file=sys.stderr)
    stakes = " ".join(
        f"{name}={stake}" for name, stake in sorted(result.ledger.stake_accounts.items())
    )
    print(f"# stakes: {stakes} pot={result.ledger.penalty_pot}", file=sys.stderr)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    try:
        scenario = _load_scenario(args.scenario, args.horizon_ms)
        with open(args.golden, encoding="utf-8") as handle:
            golden = handle.read()
        result = run(scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rendered = render_timeline(result)
    if rendered == golden:
        print(f"OK {args.scenario} matches {args.golden}")
        return 0
    got_lines = rendered.splitlines()
    want_lines = golden.splitlines()
    for i in range(max(len(got_lines), len(want_lines))):
        got = got_lines[i] if i < len(got_lines) else "<missing>"
        want = want_lines[i] if i < len(want_lines) else "<missing>"
        if got != want:
            print(f"mismatch at line {i + 1}:", file=sys.stderr)
            print(f"  golden: {want}", file=sys.stderr)
            print(f"  got:    {got}", file=sys.stderr)
            return 1
    return 1


def cmd_properties(args: argparse.Namespace) -> int:
    if args.iterations < 1:
        print("error: --iterations must be >= 1", file=sys.stderr)
        return 2
    failures = 0
    report = props.run_trichotomy_sweep(args.seed, args.iterations)
    print(report.summary())
    if not report.ok:
        print(report.counterexample_text())
        failures += 1
    report = props.run_center_resistance_sweep(args.seed, max(1, args.iterations // 20))
    print(report.summary())
    if not report.ok:
        print(report.counterexample_text())
        failures += 1
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="porsim",
        description="Deterministic proof-of-response relay network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write its trace")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", help="trace output path (default: stdout)")
    p_run.add_argument("--timeline", help="also write the rendered timeline here")
    p_run.add_argument("--horizon-ms", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="compare a run's timeline against a golden")
    p_check.add_argument("--scenario", required=True)
    p_check.add_argument("--golden", required=True)
    p_check.add_argument("--horizon-ms", type=int, default=None)
    p_check.set_defaults(func=cmd_check)

    p_props = sub.add_parser("properties", help="run the randomized invariant suites")
    p_props.add_argument("--seed", type=int, default=1)
    p_props.add_argument("--iterations", type=int, default=100)
    p_props.set_defaults(func=cmd_properties)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
