"""Command-line entry point: ``solve``, ``verify``, ``fuzz`` and ``bench``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .context import Options
from .runner import run_script
from .script import ParseError, parse_script


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="script file, or - for stdin")
    p.add_argument("--search", choices=("lin", "bin", "ada"), default="lin")
    p.add_argument("--bnb", choices=("basic", "advanced", "truncated"), default="advanced")
    p.add_argument("--branch-limit", type=int, default=250,
                   help="branching steps before truncated B&B hands back (default 250)")
    p.add_argument("--mode", choices=("single", "boxed", "lex"), default="boxed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats", action="store_true", help="print counters after the run")
    p.add_argument("--ada-lin-shrink", type=Fraction, default=Fraction(1, 2),
                   help="adaptive: go binary after a linear step shrinking the range less")
    p.add_argument("--ada-bin-gain", type=Fraction, default=Fraction(1, 8),
                   help="adaptive: force a linear step after a binary step gaining less")
    p.add_argument("--max-consecutive-bin", type=int, default=2,
                   help="adaptive: binary steps in a row before a forced linear one")


def _options(args) -> Options:
    return Options(search=args.search, bnb=args.bnb, branch_limit=args.branch_limit,
                   mode=args.mode, seed=args.seed, ada_lin_shrink=args.ada_lin_shrink,
                   ada_bin_gain=args.ada_bin_gain,
                   max_consecutive_bin=args.max_consecutive_bin)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def cmd_solve(args, verify: bool) -> int:
    try:
        script = parse_script(_read(args.file))
    except ParseError as e:
        print(f"{args.file}:{e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        return run_script(script, _options(args), sys.stdout, verify=verify, stats=args.stats)
    except Exception as e:  # solver errors surface as a nonzero exit
        print(f"error: {e}", file=sys.stderr)
        return 3


def cmd_fuzz(args) -> int:
    from .harness.fuzz import FuzzConfig, fuzz_round
    cfg = FuzzConfig(seed=args.seed)
    summary = fuzz_round(cfg, args.count, args.keep_failing,
                         (args.min_objectives, args.max_objectives))
    for name, bad in summary.failed:
        for line in bad:
            print(f"FAIL {name}: {line}")
    print(f"fuzz seed={args.seed} instances={summary.total} passed={summary.passed} "
          f"failed={len(summary.failed)} runs={summary.runs}")
    return 0 if summary.ok else 1


def cmd_bench(args) -> int:
    from .harness.bench import BenchConfig, run_benchmark, rows_to_csv
    try:
        configs = [BenchConfig.parse(c) for c in args.configs.split(",") if c.strip()]
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    rows = run_benchmark(args.dir, configs, args.timeout_ms, args.seed,
                         wall_clock=not args.no_wall_clock)
    text = rows_to_csv(rows)
    if args.csv == "-":
        sys.stdout.write(text)
    else:
        Path(args.csv).write_text(text)
        print(f"wrote {len(rows)} rows to {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omtla", description="OMT solver for linear arithmetic")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a script")
    _add_solver_flags(p)
    p.add_argument("--verify", action="store_true", help="cross-check every reported optimum")

    p = sub.add_parser("verify", help="run a script, then cross-check every optimum")
    _add_solver_flags(p)

    p = sub.add_parser("fuzz", help="differential fuzzing against the brute-force oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--keep-failing", metavar="DIR", help="dump failing instances here")
    p.add_argument("--min-objectives", type=int, default=1)
    p.add_argument("--max-objectives", type=int, default=1)

    p = sub.add_parser("bench", help="run a directory of scripts and write CSV")
    p.add_argument("--dir", required=True)
    p.add_argument("--csv", default="-", help="output file (default stdout)")
    p.add_argument("--timeout-ms", type=int, default=10000)
    p.add_argument("--configs", default="incremental,multiobjective",
                   help="comma-separated strategy[/search[/bnb]] entries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-wall-clock", action="store_true",
                   help="write wall_ms as 0 so that output is byte-reproducible")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args, args.verify)
    if args.command == "verify":
        return cmd_solve(args, True)
    if args.command == "fuzz":
        return cmd_fuzz(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
