"""Benchmark runs over a directory of scripts, written as CSV."""
from __future__ import annotations

import csv
import io
import signal
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..context import Options, Statistics
from ..engine import optimize
from ..runner import Problem, build_context, render_objective_value
from ..script import (Assert, CheckSat, DeclareFun, Minimize, ParseError, Pop, Push,
                      parse_script)

CSV_VERSION = "omtla-bench v1"
COLUMNS = ("instance", "config", "status", "objective", "value", "attained", "wall_ms",
           "sat_assignments", "minimize_calls", "learned_cost_clauses", "pivots_decided",
           "bnb_nodes", "restarts", "solve_calls")
STRATEGIES = ("singleobjective", "incremental", "multiobjective", "lex")
DEFAULT_CONFIGS = ("incremental", "multiobjective")


class BenchTimeout(Exception):
    pass


@dataclass(frozen=True)
class BenchConfig:
    """``strategy[/search[/bnb]]``, e.g. ``incremental/bin/truncated``."""
    strategy: str
    search: str = "lin"
    bnb: str = "advanced"

    @classmethod
    def parse(cls, text: str) -> "BenchConfig":
        parts = text.strip().split("/")
        if parts[0] not in STRATEGIES or len(parts) > 3:
            raise ValueError(f"unknown benchmark configuration {text!r}")
        return cls(*parts)

    @property
    def label(self) -> str:
        return "/".join((self.strategy, self.search, self.bnb))

    def options(self, seed: int) -> Options:
        mode = {"multiobjective": "boxed", "lex": "lex"}.get(self.strategy, "single")
        return Options(search=self.search, bnb=self.bnb, mode=mode, seed=seed)


def flatten(text: str) -> Problem:
    """The assertion stack of a script as it stands at its last ``check-sat``."""
    script = parse_script(text)
    decls: dict = {}
    frames = [([], [])]
    snapshot = None
    for cmd in script.commands:
        if isinstance(cmd, DeclareFun):
            decls[cmd.name] = cmd.sort
        elif isinstance(cmd, Assert):
            frames[-1][0].append(cmd.expr)
        elif isinstance(cmd, Minimize):
            frames[-1][1].append(cmd)
        elif isinstance(cmd, Push):
            frames.extend(([], []) for _ in range(cmd.n))
        elif isinstance(cmd, Pop):
            del frames[len(frames) - cmd.n:]
        elif isinstance(cmd, CheckSat):
            snapshot = [list(f[0]) for f in frames], [list(f[1]) for f in frames]
    if snapshot is None:
        snapshot = [f[0] for f in frames], [f[1] for f in frames]
    asserts = [a for f in snapshot[0] for a in f]
    objectives = [o for f in snapshot[1] for o in f]
    return Problem(decls, asserts, objectives)


@contextmanager
def _deadline(ms: Optional[int]):
    if not ms:
        yield
        return

    def expire(signum, frame):
        raise BenchTimeout()

    old = signal.signal(signal.SIGALRM, expire)
    signal.setitimer(signal.ITIMER_REAL, ms / 1000)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


def _add_stats(total: Statistics, part: Statistics) -> None:
    for k in Statistics.FIELDS:
        setattr(total, k, getattr(total, k) + getattr(part, k))


def solve_config(problem: Problem, config: BenchConfig, seed: int = 0):
    """Returns ``(outcome status, objective results, Statistics)``."""
    opts = config.options(seed)
    if config.strategy == "singleobjective" and len(problem.objectives) > 1:
        stats = Statistics()
        results = []
        status = "sat"
        for m in problem.objectives:
            ctx = build_context(Problem(problem.decls, problem.assertions, [m]), opts)
            out = optimize(ctx)
            _add_stats(stats, ctx.stats)
            results.extend(out.objectives)
            status = out.status
            if status != "sat":
                break
        return status, results, stats
    ctx = build_context(problem, opts)
    out = optimize(ctx)
    return out.status, out.objectives, ctx.stats


def run_instance(name: str, text: str, config: BenchConfig, timeout_ms: Optional[int] = None,
                 seed: int = 0, wall_clock: bool = True) -> dict:
    row = {"instance": name, "config": config.label, "objective": "", "value": "",
           "attained": ""}
    stats = Statistics()
    start = time.perf_counter()
    try:
        problem = flatten(text)
        with _deadline(timeout_ms):
            status, results, stats = solve_config(problem, config, seed)
        row["status"] = status
        row["objective"] = ";".join(r.name for r in results)
        row["value"] = ";".join(render_objective_value(r.value) for r in results)
        row["attained"] = ";".join("true" if r.attained else "false" for r in results)
    except BenchTimeout:
        row["status"] = "timeout"
    except ParseError:
        row["status"] = "error"
    elapsed = (time.perf_counter() - start) * 1000
    row["wall_ms"] = f"{elapsed:.1f}" if wall_clock else "0"
    row.update(stats.as_dict())
    return row


def run_benchmark(directory, configs=DEFAULT_CONFIGS, timeout_ms: Optional[int] = None,
                  seed: int = 0, wall_clock: bool = True, pattern: str = "*.smt2") -> list:
    """One row per instance x configuration, instances in sorted order."""
    configs = [c if isinstance(c, BenchConfig) else BenchConfig.parse(c) for c in configs]
    rows = []
    for path in sorted(Path(directory).glob(pattern)):
        text = path.read_text()
        for cfg in configs:
            rows.append(run_instance(path.name, text, cfg, timeout_ms, seed, wall_clock))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(rows_to_csv(rows))
