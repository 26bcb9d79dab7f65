"""Command line entry point: `mtskit <subcommand> ...`."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import MtsError, StructuralError
from .report import jsonify
from .scenario import load_scenario, resolve_scenario_path, run_scenario
from .trace import replay

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_STRUCTURAL = 0, 1, 2, 3

CATEGORIES = {"check": "check", "faults": "faults", "grassroots": "grassroots", "compose": "compose",
              "simulate": "simulate"}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtskit", description="Bounded checks for multiagent transition systems.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for cmd in CATEGORIES:
        sp = sub.add_parser(cmd, help=f"run the {cmd} part of a scenario" if cmd != "check" else "run every check")
        sp.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
        sp.add_argument("--seed", type=int, help="base seed for checks without their own")
        sp.add_argument("--depth", type=int, help="override every depth bound")
        sp.add_argument("--horizon", type=int, help="override every run horizon")
        sp.add_argument("--out", help="directory for report.jsonl and traces")
        sp.add_argument("--quiet", action="store_true", help="print only the summary line")
    rp = sub.add_parser("replay", help="re-validate a trace file")
    rp.add_argument("trace")
    rp.add_argument("--params", help="JSON object overriding top-level system parameters")
    rp.add_argument("--out", help="write the verdict as JSON here")
    sub.add_parser("list", help="list bundled scenarios")
    return ap


def _positive(args: argparse.Namespace) -> None:
    for flag in ("depth", "horizon"):
        v = getattr(args, flag, None)
        if v is not None and v < 1:
            raise StructuralError(f"--{flag}: must be >= 1")


def _run(args: argparse.Namespace) -> int:
    if args.cmd == "list":
        from .scenario import bundled_scenarios

        for name, path in bundled_scenarios().items():
            print(f"{name}\t{path}")
        return EXIT_OK
    if args.cmd == "replay":
        overrides = None
        if args.params:
            try:
                overrides = json.loads(args.params)
            except json.JSONDecodeError as e:
                raise StructuralError(f"--params: not valid JSON ({e.msg})") from None
            if not isinstance(overrides, dict):
                raise StructuralError("--params: must be a JSON object")
        res = replay(args.trace, overrides)
        text = res.to_json()
        print(text)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        return EXIT_OK if res.passed else EXIT_FAIL
    _positive(args)
    sc = load_scenario(resolve_scenario_path(args.scenario), seed=args.seed, depth=args.depth, horizon=args.horizon)
    category = None if args.cmd == "check" else CATEGORIES[args.cmd]
    rep = run_scenario(sc, args.out, category=category if category != "simulate" else "simulate-only",
                       simulate=True if args.cmd in ("check", "simulate") else False)
    if not args.quiet:
        for ln in rep.lines[1:-1]:
            mark = "ok " if ln.get("ok") else "BAD"
            if ln["type"] == "check":
                print(f"{mark} {ln['id']}: {ln['check']} -> {ln['status']} (expected {ln['expect']})")
            else:
                print(f"{mark} {ln['id']}: simulate {ln['system']} {ln['steps']} steps")
    print(json.dumps(jsonify(rep.lines[-1]), ensure_ascii=False))
    return rep.exit_code


def main(argv: list | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args)
    except StructuralError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except MtsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
