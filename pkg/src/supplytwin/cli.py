"""Run supply-chain scenarios in the real and ideal worlds and compare them.

Exit codes: 0 when every assertion holds, 1 on a divergence or an illegal
state change, 2 on unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .domain import canonical_json
from .errors import LedgerRejected, ScenarioError
from .harness.attacks import STRATEGIES, attack
from .harness.ladder import DEFAULT_ATTEMPTS, hybrid_ladder
from .harness.scenario import SCENARIO_SCHEMA, Scenario
from .harness.worlds import IdealWorld, RealWorld, compare
from .ledger import Ledger

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _emit(doc, fmt: str, pretty=None) -> None:
    if fmt == "json":
        print(json.dumps(doc, sort_keys=True))
    elif pretty is not None:
        pretty(doc)
    else:
        print(json.dumps(doc, sort_keys=True, indent=2))


def _load(args) -> Scenario:
    scenario = Scenario.load(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    return scenario


def _write(out: Path | None, name: str, doc) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# -- subcommands ---------------------------------------------------------------
def cmd_run(args) -> int:
    scenario = _load(args)
    out = Path(args.out) if args.out else None
    result: dict = {"scenario": scenario.name or args.scenario, "world": args.world}
    real = ideal = None
    if args.world in ("real", "both"):
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        world = RealWorld(scenario, ledger_path=out / "ledger.jsonl" if out else None)
        real = world.run()
        _write(out, "trace-real.json", real)
        if out is not None:
            (out / "records.jsonl").write_text("".join(canonical_json(r.to_json()) + "\n" for r in world.records()))
        result["real"] = {"steps": len(real["steps"]), "ledger": len(real["ledger"])}
    if args.world in ("ideal", "both"):
        ideal = IdealWorld(scenario, broken=args.break_simulator).run()
        _write(out, "trace-ideal.json", ideal)
        result["ideal"] = {"steps": len(ideal["steps"]), "ledger": len(ideal["ledger"])}
    code = EXIT_OK
    if real is not None and ideal is not None:
        verdict = compare(real, ideal)
        result["verdict"] = verdict.to_json()
        _write(out, "verdict.json", verdict.to_json())
        code = EXIT_OK if verdict.equal else EXIT_FAIL

    def pretty(doc):
        for world in ("real", "ideal"):
            if world in doc:
                print(f"{world:5}: {doc[world]['steps']} steps, {doc[world]['ledger']} ledger entries")
        if "verdict" in doc:
            if verdict.equal:
                print("verdict: traces equal")
            else:
                print("verdict: DIVERGENCE")
                print(verdict.divergence.describe())

    _emit(result, args.format, pretty)
    return code


def cmd_attack(args) -> int:
    names = sorted(STRATEGIES) if args.strategy == "all" else [args.strategy]
    if any(n not in STRATEGIES for n in names):
        print(f"unknown strategy {args.strategy!r}; choose from: all, {', '.join(STRATEGIES)}", file=sys.stderr)
        return EXIT_INPUT
    scenario = _load(args) if args.scenario else None
    seed = args.seed if args.seed is not None else 0
    reports = [attack(n, s, scenario) for n in names for s in range(seed, seed + args.seeds)]
    docs = [r.to_json() for r in reports]

    def pretty(doc):
        for r in doc:
            change = "ILLEGAL STATE CHANGE" if r["illegal_change"] else "no state change"
            fired = "fired" if r["fired"] else "did not fire"
            print(f"{r['strategy']} seed={r['seed']}: {change}; {r['designated']} {fired}")

    _emit(docs if len(docs) > 1 else docs[0], args.format, lambda d: pretty(d if isinstance(d, list) else [d]))
    return EXIT_FAIL if any(r.illegal_change for r in reports) else EXIT_OK


def cmd_ladder(args) -> int:
    scenario = _load(args)
    report = hybrid_ladder(scenario, broken=args.break_simulator, attempts=args.attempts)
    doc = report.to_json()
    _write(Path(args.out) if args.out else None, "ladder.json", doc)

    def pretty(doc):
        for c in doc["comparisons"]:
            print(f"{c['pair']}: {'equal' if c['equal'] else 'DIVERGENCE at ' + c['divergence']['where']}")
        for f in doc["forgeries"]:
            print(f"{f['name']} ({f['boundary']}): {f['accepted']}/{f['attempts']} accepted, reasons {f['reasons']}")
        print("ladder: pass" if doc["passed"] else "ladder: FAIL")

    _emit(doc, args.format, pretty)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_dump_ledger(args) -> int:
    try:
        ledger = Ledger.replay(args.ledger)
    except OSError as exc:
        print(f"cannot read {args.ledger}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, LedgerRejected) as exc:
        print(f"invalid ledger {args.ledger}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format == "json":
        sys.stdout.write(Path(args.ledger).read_text())
    else:
        for n, tx in enumerate(ledger.entries):
            print(f"{n:4} {tx.credential().party:>10} {tx.op:12} {json.dumps(tx.args, sort_keys=True)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.print_schema:
        print(json.dumps(SCENARIO_SCHEMA, sort_keys=True, indent=2))
        return EXIT_OK
    if args.scenario is None:
        print("validate needs a scenario path or --print-schema", file=sys.stderr)
        return EXIT_INPUT
    scenario = Scenario.load(args.scenario)
    _emit({"valid": True, "steps": len(scenario.steps), "parties": sorted(scenario.parties)}, args.format,
          lambda d: print(f"valid: {d['steps']} steps, parties {', '.join(d['parties'])}"))
    return EXIT_OK


# -- parser --------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supplytwin", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", help="directory for traces, ledger and verdict files")
    common.add_argument("--format", choices=("json", "pretty"), default="pretty")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario in one or both worlds")
    p.add_argument("scenario")
    p.add_argument("--world", choices=("real", "ideal", "both"), default="both")
    p.add_argument("--break-simulator", action="store_true", help="fault injection: drop one simulated tx")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", parents=[common], help="run an adversary strategy against the protocol")
    p.add_argument("strategy", help="strategy name or 'all'")
    p.add_argument("scenario", nargs="?", help="custom attack scenario; corrupted parties' steps are the attack")
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to run")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("ladder", parents=[common], help="compare the hybrid levels H3..H0")
    p.add_argument("scenario")
    p.add_argument("--break-simulator", action="store_true")
    p.add_argument("--attempts", type=int, default=DEFAULT_ATTEMPTS, help="forgery attempts per boundary")
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("dump-ledger", parents=[common], help="replay and print a ledger file")
    p.add_argument("ledger")
    p.set_defaults(func=cmd_dump_ledger)

    p = sub.add_parser("validate", parents=[common], help="check a scenario against the schema")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--print-schema", action="store_true")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
