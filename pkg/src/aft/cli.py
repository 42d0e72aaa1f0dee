"""Command-line entry point: ``aft run``, ``aft replay-check`` and ``aft probe``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import hwprobe
from .scenario import MissingOutputsError, ScenarioError, load_scenario, probe_outputs, replay_check, run


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    status = run(scenario, args.out)
    print(f"wrote {', '.join(scenario.outputs)} to {args.out}")
    return status


def _cmd_replay_check(args) -> int:
    scenario = load_scenario(args.scenario)
    try:
        identical, differing = replay_check(scenario, args.out)
    except MissingOutputsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if identical:
        print("replay-check: outputs are byte-identical")
        return 0
    print(f"replay-check: outputs differ: {', '.join(differing)}")
    return 1


def _cmd_probe(args) -> int:
    try:
        rows, _ = probe_outputs(
            Path(args.inventory).read_text(),
            Path(args.kb).read_text(),
            Path(args.methods).read_text(),
            args.default,
        )
    except (OSError, hwprobe.ProbeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(hwprobe.report_csv(rows))
    for row in rows:
        if row.method is None:
            print(f"{row.slot}: no access method tolerates {row.behavior}", file=sys.stderr)
    return 0 if all(r.method is not None for r in rows) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aft", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its outputs")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay-check", help="re-run a scenario and compare with previous outputs")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_replay_check)

    p = sub.add_parser("probe", help="select memory access methods for an inventory")
    p.add_argument("--inventory", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--methods", required=True)
    p.add_argument("--default", default="f4", choices=sorted(hwprobe.FAILURE_ASSUMPTIONS))
    p.set_defaults(func=_cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
