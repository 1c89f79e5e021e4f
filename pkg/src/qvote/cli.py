"""Command-line front end: run, verify, sweep, and attack scenario files.

Exit codes: 0 success, 1 validation error, 2 invariant or acceptance
failure detected during the run, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .runner import emit_report, execute
from .scenario import ScenarioError, parse_scenario
from .states import DenseBudgetError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INVARIANT = 2
EXIT_BUDGET = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvote",
        description="Simulate anonymous-voting protocols, group multiplication, and attacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "execute a scenario and report outcomes"),
        ("verify", "run the invariant suite for a scenario"),
        ("sweep", "exhaustively enumerate vote vectors for a scenario"),
        ("attack", "run an adversary scenario (requires an [attack] section)"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", type=Path, help="path to the scenario file")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument(
            "--backend", choices=["dense", "branch", "both"], default=None,
            help="override [run] backend",
        )
        p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
        p.add_argument(
            "--format", choices=["text", "json-lines"], default="text", dest="fmt",
            help="report format (default: text)",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.scenario.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        cfg = parse_scenario(text)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.seed is not None:
        cfg.seed = args.seed
    if args.backend is not None:
        cfg.backend = args.backend
    if args.command == "attack" and cfg.attack is None:
        print("scenario error: 'attack' command needs an [attack] section", file=sys.stderr)
        return EXIT_VALIDATION

    command = "run" if args.command == "attack" else args.command
    try:
        report = execute(cfg, command=command)
    except DenseBudgetError as exc:
        print(f"budget error: {exc} (hint: switch to backend = branch)", file=sys.stderr)
        return EXIT_BUDGET
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    payload = emit_report(report, args.fmt)
    if args.out is not None:
        args.out.write_bytes(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))
    return EXIT_OK if report.passed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
