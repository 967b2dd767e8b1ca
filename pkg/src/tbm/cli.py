"""Command line driver: ``tbm run FILE`` and ``tbm check FILE``.

Exit status is 0 on success, 1 when an ``expect`` step fails and 2 on any
error.  FILE may also name a bundled scenario (``variant1``, ...).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import TBMError
from .scenario import bundled, bundled_names, load_config, parse_scenario, run


def _read(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    if path.removesuffix(".tbm") in bundled_names():
        return bundled(path)
    raise FileNotFoundError(f"no such scenario: {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tbm", description="Run temporal belief scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario and report query results")
    p_run.add_argument("file")
    p_run.add_argument("--stepped", action="store_true",
                       help="one transaction per step instead of batching all asserts")
    p_run.add_argument("--format", choices=("text", "json"), default="text")
    p_run.add_argument("--trace", action="store_true", help="log firings, monitors and signals")
    p_run.add_argument("--config", metavar="FILE", help="file of (config ...) overrides")
    p_check = sub.add_parser("check", help="parse a scenario without running it")
    p_check.add_argument("file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = parse_scenario(_read(args.file))
        if args.command == "check":
            print(f"ok: {len(scenario.rules)} rules, {len(scenario.events)} events, "
                  f"{len(scenario.queries)} queries")
            return 0
        config = load_config(_read(args.config)) if args.config else None
        report = run(scenario, "stepped" if args.stepped else "batch",
                     config=config, trace=args.trace)
    except (TBMError, OSError, ValueError) as exc:
        print(f"tbm: {args.file}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report.to_json() + "\n" if args.format == "json" else report.to_text())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
