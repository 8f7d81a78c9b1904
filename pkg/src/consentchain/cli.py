"""Command line entry points.

Exit codes are part of the interface:
  0  success; for check, every property holds and none is vacuous
  1  unreadable or malformed input (files, scenarios, unknown properties)
  2  run completed but recorded anomalies
  3  verify parsed the chain but found it invalid
  4  check found at least one violated property
  5  check hit a candidate-bound explosion (and nothing was violated)
  6  check passed but some property held vacuously
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ledger import ValidationFailure, load_and_validate
from .report import ReportError, render_report
from .semf import (
    CheckError,
    DEFAULT_BOUND,
    DEFAULT_CEILING,
    DESIGN_GOALS,
    check_design_goals,
    properties_payload,
)
from .simnet import (
    ScenarioError,
    anomalies_payload,
    load_scenario,
    read_trace,
    run_scenario,
    standard_scenarios,
    write_trace,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ANOMALIES = 2
EXIT_INVALID = 3
EXIT_VIOLATED = 4
EXIT_EXPLOSION = 5
EXIT_VACUOUS = 6


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return EXIT_INPUT


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
        result = run_scenario(scenario, seed_override=args.seed)
    except ScenarioError as exc:
        return _fail(f"run: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "chain.cchn").write_bytes(result.chain.serialize())
    write_trace(out / "trace.ndjson", result.trace)
    (out / "anomalies.json").write_text(
        json.dumps(anomalies_payload(result), indent=2, sort_keys=True) + "\n"
    )
    diverged = {name for name, _ in result.ledger.divergences}
    for name in sorted(diverged):
        (out / f"replica_{name}.cchn").write_bytes(result.ledger.replicas[name])
    print(f"{scenario.name}: {result.chain.height()} blocks, {len(result.trace)} trace events")
    print(f"coverage: {', '.join(sorted(result.coverage)) or 'none'}")
    if result.anomalies:
        print(f"anomalies: {len(result.anomalies)} (see anomalies.json)")
        return EXIT_ANOMALIES
    print("anomalies: none")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        data = Path(args.chain).read_bytes()
    except OSError as exc:
        return _fail(f"verify: {exc}")
    chain, result = load_and_validate(data)
    if result.ok:
        assert chain is not None
        print(f"valid: {chain.height()} blocks, head {chain.head_digest().hex()[:16]}")
        return EXIT_OK
    if result.reason == ValidationFailure.PARSE_ERROR:
        print(f"parse error: {result.detail}", file=sys.stderr)
        return EXIT_INPUT
    print(f"invalid at block {result.first_bad_index}: {result.reason.value} ({result.detail})")
    return EXIT_INVALID


def cmd_check(args: argparse.Namespace) -> int:
    try:
        trace = read_trace(args.trace)
    except ScenarioError as exc:
        return _fail(f"check: {exc}")
    try:
        chain_bytes = Path(args.chain).read_bytes()
    except OSError as exc:
        return _fail(f"check: {exc}")
    properties = tuple(p.strip() for p in args.properties.split(",") if p.strip())
    try:
        outcomes = check_design_goals(
            trace,
            chain_bytes,
            properties=properties,
            k=args.bound,
            ceiling=args.ceiling,
        )
    except CheckError as exc:
        return _fail(f"check: {exc}")
    out_dir = Path(args.out) if args.out else Path(args.trace).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = properties_payload(outcomes, k=args.bound, ceiling=args.ceiling)
    (out_dir / "properties.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for name in properties:
        o = outcomes[name]
        extra = " (vacuous)" if o.vacuous else ""
        if o.status == "bound_explosion":
            extra = f" (estimate {o.estimate})"
        print(f"{name}: {o.status}{extra}")
    statuses = [outcomes[name].status for name in properties]
    if "violated" in statuses:
        return EXIT_VIOLATED
    if "bound_explosion" in statuses:
        return EXIT_EXPLOSION
    if any(outcomes[name].vacuous for name in properties):
        return EXIT_VACUOUS
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        written = render_report(args.out)
    except (ReportError, ScenarioError, OSError, json.JSONDecodeError) as exc:
        return _fail(f"report: {exc}")
    for path in written:
        print(path)
    return EXIT_OK


def cmd_scenarios(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, scenario in sorted(standard_scenarios().items()):
        path = out / f"{name}.json"
        path.write_text(json.dumps(scenario.to_json(), indent=2) + "\n")
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consentchain",
        description="consent-ledger simulator, verifier, and trace checker",
    )
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="execute a scenario and write its artifacts")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="re-validate a chain file")
    p_verify.add_argument("--chain", required=True, help="chain file (.cchn)")
    p_verify.set_defaults(func=cmd_verify)

    p_check = sub.add_parser("check", help="check trace properties against a chain")
    p_check.add_argument("--trace", required=True, help="trace file (.ndjson)")
    p_check.add_argument("--chain", required=True, help="chain file (.cchn)")
    p_check.add_argument(
        "--properties",
        default=",".join(DESIGN_GOALS),
        help="comma-separated property names (default: the five design goals)",
    )
    p_check.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="insertions per gap")
    p_check.add_argument("--ceiling", type=int, default=DEFAULT_CEILING, help="candidate estimate ceiling")
    p_check.add_argument("--out", default=None, help="directory for properties.json (default: next to the trace)")
    p_check.set_defaults(func=cmd_check)

    p_report = sub.add_parser("report", help="render figures and a summary for a run directory")
    p_report.add_argument("--out", required=True, help="run directory to read and write")
    p_report.set_defaults(func=cmd_report)

    p_scenarios = sub.add_parser("scenarios", help="write the bundled scenario files")
    p_scenarios.add_argument("--out", required=True, help="output directory")
    p_scenarios.set_defaults(func=cmd_scenarios)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
