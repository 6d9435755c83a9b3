"""Seeded random instances and differential fuzzing against the oracle."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..arith import Infinity
from ..context import Options
from ..formula import LinearTerm, Sort
from ..runner import Problem, solve_problem
from ..script import (AndE, Assert, BoolVar, CheckSat, Cmp, DeclareFun, GetObjectives,
                      Minimize, NotE, OrE, Pop, Push, Script, print_script)
from .oracle import collect_keys, lex_oracle, oracle_optimum

SEARCHES = ("lin", "bin", "ada")
BNBS = ("advanced", "truncated")
MODES = ("single", "boxed")
RELS = ("<=", "<", ">=", ">", "<=", ">=", "=")


@dataclass
class FuzzConfig:
    seed: int = 0
    kinds: tuple = ("Q", "Z", "mixed")
    max_arith_vars: int = 4
    max_bools: int = 1
    max_atoms: int = 12
    coeff_range: int = 5
    const_range: int = 10
    int_box: int = 4
    depth: int = 2
    max_objectives: int = 1
    disjunctive_bias: float = 0.3
    unbounded_bias: float = 0.1
    relations: tuple = RELS
    searches: tuple = SEARCHES
    bnbs: tuple = BNBS
    modes: tuple = MODES


@dataclass
class Instance:
    name: str
    kind: str
    problem: Problem

    def script(self) -> Script:
        cmds = [DeclareFun(n, s) for n, s in self.problem.decls.items()]
        cmds += [Assert(a) for a in self.problem.assertions]
        cmds += list(self.problem.objectives)
        cmds += [CheckSat(), GetObjectives()]
        return Script(cmds)


def _term(rng, names, cfg, k_max=3) -> LinearTerm:
    k = rng.randint(1, min(k_max, len(names)))
    vs = rng.sample(names, k)
    coeffs = {}
    for v in vs:
        c = 0
        while c == 0:
            c = rng.randint(-cfg.coeff_range, cfg.coeff_range)
        coeffs[v] = c
    return LinearTerm(coeffs, rng.randint(-cfg.const_range, cfg.const_range))


def generate(rng: random.Random, cfg: FuzzConfig, name: str, n_objectives: int = 1) -> Instance:
    kind = rng.choice(cfg.kinds)
    n_arith = rng.randint(1, cfg.max_arith_vars)
    if kind == "Q":
        sorts = [Sort.REAL] * n_arith
    elif kind == "Z":
        sorts = [Sort.INT] * n_arith
    else:
        n_arith = max(n_arith, 2)
        n_int = rng.randint(1, min(2, n_arith - 1))
        sorts = [Sort.INT] * n_int + [Sort.REAL] * (n_arith - n_int)
    names = [f"x{i}" for i in range(n_arith)]
    decls = dict(zip(names, sorts))
    bools = [f"b{i}" for i in range(rng.randint(0, cfg.max_bools))]
    for b in bools:
        decls[b] = Sort.BOOL
    budget = cfg.max_atoms
    asserts = []
    unbounded = rng.random() < cfg.unbounded_bias
    # boxes: integers always boxed, reals mostly boxed
    for n, s in zip(names, sorts):
        if s is Sort.INT:
            lo = rng.randint(-cfg.int_box, 0)
            hi = rng.randint(0, cfg.int_box)
            asserts.append(Cmp(LinearTerm({n: 1}, -lo), ">="))
            asserts.append(Cmp(LinearTerm({n: 1}, -hi), "<="))
            budget -= 2
        elif not unbounded and rng.random() < 0.8 and budget >= 2:
            lo = rng.randint(-cfg.const_range, 0)
            hi = rng.randint(0, cfg.const_range)
            asserts.append(Cmp(LinearTerm({n: 1}, -lo), rng.choice((">=", ">"))))
            asserts.append(Cmp(LinearTerm({n: 1}, -hi), rng.choice(("<=", "<"))))
            budget -= 2
    disjunctive = rng.random() < cfg.disjunctive_bias
    n_free = max(0, budget - rng.randint(0, 2))

    def atom():
        return Cmp(_term(rng, names, cfg), rng.choice(cfg.relations))

    def literal():
        if bools and rng.random() < 0.15:
            b = BoolVar(rng.choice(bools))
            return b if rng.random() < 0.5 else NotE(b)
        a = atom()
        return a if rng.random() < 0.8 else NotE(a)

    used = 0
    while used < n_free:
        if disjunctive and n_free - used >= 2:
            width = rng.randint(2, min(3, n_free - used))
            parts = []
            for _ in range(width):
                if cfg.depth > 1 and rng.random() < 0.3 and n_free - used - len(parts) >= 2:
                    parts.append(AndE((literal(), literal())))
                    used += 1
                else:
                    parts.append(literal())
            used += width
            asserts.append(OrE(tuple(parts)))
        else:
            asserts.append(literal())
            used += 1
    while _atom_count(asserts) > cfg.max_atoms:
        asserts.pop()
    arith_names = names
    objectives = []
    for i in range(n_objectives):
        term = _term(rng, arith_names, cfg, k_max=3)
        maximize = rng.random() < 0.3
        objectives.append(Minimize(term, f"obj{i}", maximize))
    return Instance(name, kind, Problem(decls, asserts, objectives))


def incremental_script(rng: random.Random, cfg: FuzzConfig, name: str,
                       max_objectives: int = 3) -> Script:
    """A random instance spread over push/assert/minimize/check-sat/pop commands.

    Integer box bounds go to the base frame so that every intermediate
    problem stays in the fragment where branch and bound is complete.
    """
    p = generate(rng, cfg, name, rng.randint(1, max_objectives)).problem
    base = [a for a in p.assertions if _is_int_bound(a, p.decls)]
    items = [Assert(a) for a in p.assertions if a not in base] + list(p.objectives)
    rng.shuffle(items)
    cmds = [DeclareFun(n, s) for n, s in p.decls.items()] + [Assert(a) for a in base]
    depth = 0
    for item in items:
        if rng.random() < 0.35:
            cmds.append(Push(1))
            depth += 1
        cmds.append(item)
        if rng.random() < 0.4:
            cmds.append(CheckSat())
        if depth and rng.random() < 0.25:
            cmds.append(CheckSat())
            cmds.append(Pop(1))
            depth -= 1
    cmds.append(CheckSat())
    while depth:
        cmds.append(Pop(1))
        cmds.append(CheckSat())
        depth -= 1
    return Script(cmds)


def _is_int_bound(a, decls) -> bool:
    return (isinstance(a, Cmp) and len(a.term.coeffs) == 1
            and decls[a.term.coeffs[0][0]] is Sort.INT)


def _atom_count(asserts) -> int:
    return sum(1 for k in collect_keys(AndE(tuple(asserts)), {}) if isinstance(k, Cmp))


def generate_corpus(cfg: FuzzConfig, n: int, n_objectives=(1, 1)) -> list:
    rng = random.Random(cfg.seed)
    out = []
    for i in range(n):
        k = rng.randint(*n_objectives)
        out.append(generate(rng, cfg, f"fuzz-{cfg.seed}-{i}", k))
    return out


def same_value(res, expected) -> bool:
    """Solver objective result vs oracle result (exact)."""
    if res.status == "unsat" or expected.status == "unsat":
        return res.status == expected.status
    if isinstance(expected.value, Infinity) or isinstance(res.value, Infinity):
        return res.value == expected.value
    return res.value.r == expected.value and res.attained == expected.attained


@dataclass
class FuzzSummary:
    total: int = 0
    passed: int = 0
    failed: list = field(default_factory=list)
    refused: int = 0
    runs: int = 0

    @property
    def ok(self) -> bool:
        return not self.failed


def configs(cfg: FuzzConfig) -> list:
    return list(itertools.product(cfg.searches, cfg.bnbs, cfg.modes))


def check_instance(inst: Instance, cfg: FuzzConfig, summary: Optional[FuzzSummary] = None):
    """Compare every configuration with the oracle; returns a list of mismatch strings."""
    p = inst.problem
    expected = [oracle_optimum(p.decls, p.constraints(), m.term, m.maximize)
                for m in p.objectives]
    bad = []
    for search, bnb, mode in configs(cfg):
        opts = Options(search=search, bnb=bnb, mode=mode, seed=cfg.seed)
        out, _ = solve_problem(p, opts)
        if summary is not None:
            summary.runs += 1
        if out.status == "unknown":
            bad.append(f"{search}/{bnb}/{mode}: unknown")
            continue
        for m, r, e in zip(p.objectives, out.objectives, expected):
            if not same_value(r, e):
                bad.append(f"{search}/{bnb}/{mode} {m.name}: got {r.value} "
                           f"attained={r.attained}, oracle {e.value} attained={e.attained}")
    return bad


def fuzz_round(cfg: FuzzConfig, n: int, keep_failing: Optional[str] = None,
               n_objectives=(1, 1)) -> FuzzSummary:
    summary = FuzzSummary()
    for inst in generate_corpus(cfg, n, n_objectives):
        summary.total += 1
        bad = check_instance(inst, cfg, summary)
        if bad:
            summary.failed.append((inst.name, bad))
            if keep_failing:
                d = Path(keep_failing)
                d.mkdir(parents=True, exist_ok=True)
                text = "".join(f"; {b}\n" for b in bad) + print_script(inst.script())
                (d / f"{inst.name}.smt2").write_text(text)
        else:
            summary.passed += 1
    return summary


def lex_expected(p: Problem) -> list:
    return lex_oracle(p.decls, p.constraints(), [(m.term, m.maximize) for m in p.objectives])
