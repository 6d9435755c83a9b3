"""Execute parsed scripts against a solver context and print results."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

from .arith import Infinity, render_rational
from .context import Options, SolverContext
from .engine import OptimizationOutcome, optimize
from .formula import FALSE, TRUE, LinearTerm, Sort, mk_and, mk_not, mk_or
from .script import (AndE, Assert, BoolConst, BoolVar, CheckSat, Cmp, DeclareFun, Exit,
                     GetModel, GetObjectives, Minimize, NotE, OrE, Pop, Push, Script, SetOption)


@dataclass
class Problem:
    """A flat optimization problem: declarations, assertions and objectives."""
    decls: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    objectives: list = field(default_factory=list)

    @property
    def arith_vars(self) -> list:
        return [n for n, s in self.decls.items() if s is not Sort.BOOL]

    def constraints(self) -> list:
        """Assertions plus the unit bounds implied by objective attributes."""
        out = list(self.assertions)
        for m in self.objectives:
            out.extend(bound_constraints(m))
        return out


def bound_constraints(m: Minimize) -> list:
    """``:lower``/``:upper`` as constraints on the minimized cost ``c``.

    The cost ranges over ``[lower, upper[``; for maximization the cost is
    the negated term, so the term ranges over ``]lower, upper]``.
    """
    out = []
    if m.maximize:
        if m.upper is not None:
            out.append(Cmp(m.term - LinearTerm.const(m.upper), "<="))
        if m.lower is not None:
            out.append(Cmp(m.term - LinearTerm.const(m.lower), ">"))
    else:
        if m.lower is not None:
            out.append(Cmp(m.term - LinearTerm.const(m.lower), ">="))
        if m.upper is not None:
            out.append(Cmp(m.term - LinearTerm.const(m.upper), "<"))
    return out


def ctx_term(ctx: SolverContext, term: LinearTerm) -> LinearTerm:
    """Re-key a name-keyed term by the context's variable ids."""
    return LinearTerm({ctx.var(n).id: c for n, c in term.coeffs}, term.constant)


def to_formula(ctx: SolverContext, e):
    if isinstance(e, BoolConst):
        return TRUE if e.value else FALSE
    if isinstance(e, BoolVar):
        return ctx.bool_formula(ctx.var(e.name))
    if isinstance(e, Cmp):
        return ctx.atom(ctx_term(ctx, e.term), e.rel)
    if isinstance(e, NotE):
        return mk_not(to_formula(ctx, e.arg))
    if isinstance(e, AndE):
        return mk_and(to_formula(ctx, a) for a in e.args)
    if isinstance(e, OrE):
        return mk_or(to_formula(ctx, a) for a in e.args)
    raise TypeError(f"unexpected expression {e!r}")


def add_objective(ctx: SolverContext, m: Minimize):
    return ctx.add_objective(ctx_term(ctx, m.term), m.maximize, m.name, m.lower, m.upper)


def build_context(problem: Problem, options: Optional[Options] = None) -> SolverContext:
    ctx = SolverContext(options or Options())
    for name, sort in problem.decls.items():
        ctx.declare(name, sort)
    for a in problem.assertions:
        ctx.assert_formula(to_formula(ctx, a))
    for m in problem.objectives:
        add_objective(ctx, m)
    return ctx


def solve_problem(problem: Problem, options: Optional[Options] = None):
    ctx = build_context(problem, options)
    return optimize(ctx), ctx


# -- rendering ------------------------------------------------------------------

def render_objective_value(v) -> str:
    if v is None:
        return "unresolved"
    if isinstance(v, Infinity):
        return str(v)
    return render_rational(v.r)


def render_objectives(out: OptimizationOutcome) -> str:
    parts = []
    for r in out.objectives:
        att = "true" if r.attained else "false"
        parts.append(f"({r.name} {render_objective_value(r.value)} :attained {att})")
    return "(objectives" + "".join(" " + p for p in parts) + ")"


def render_model(model: Optional[dict], decls: dict) -> str:
    if not model:
        return "(model)"
    parts = []
    for name, sort in decls.items():
        if name not in model:
            continue
        v = model[name]
        text = ("true" if v else "false") if sort is Sort.BOOL else render_rational(v)
        parts.append(f"(define-fun {name} () {sort.value} {text})")
    return "(model" + "".join(" " + p for p in parts) + ")"


# -- the command loop -----------------------------------------------------------

OPTION_KEYS = {":search": "search", ":bnb": "bnb", ":mode": "mode",
               ":branch-limit": "branch_limit"}


class ScriptRunner:
    """Runs commands in order against one context; tracks a flat view for checks."""

    def __init__(self, options: Optional[Options] = None, out=None, verify: bool = False,
                 stats: bool = False):
        self.options = options or Options()
        self.ctx = SolverContext(self.options)
        self.out = out if out is not None else sys.stdout
        self.verify = verify
        self.stats = stats
        self.frames = [([], [])]
        self.decls: dict = {}
        self.last: Optional[OptimizationOutcome] = None
        self.outcomes: list = []
        self.verify_failures = 0

    def emit(self, line: str) -> None:
        self.out.write(line + "\n")

    def problem(self) -> Problem:
        asserts = [a for f in self.frames for a in f[0]]
        objs = [o for f in self.frames for o in f[1]]
        return Problem(dict(self.decls), asserts, objs)

    def run(self, script: Script) -> int:
        for cmd in script.commands:
            if isinstance(cmd, Exit):
                break
            self.execute(cmd)
        if self.stats:
            for k, v in self.ctx.stats.as_dict().items():
                self.emit(f"; stats: {k}={v}")
        return 1 if self.verify_failures else 0

    def execute(self, cmd) -> None:
        ctx = self.ctx
        if isinstance(cmd, DeclareFun):
            ctx.declare(cmd.name, cmd.sort)
            self.decls[cmd.name] = cmd.sort
        elif isinstance(cmd, Assert):
            ctx.assert_formula(to_formula(ctx, cmd.expr))
            self.frames[-1][0].append(cmd.expr)
        elif isinstance(cmd, Minimize):
            add_objective(ctx, cmd)
            self.frames[-1][1].append(cmd)
        elif isinstance(cmd, Push):
            for _ in range(cmd.n):
                ctx.push()
                self.frames.append(([], []))
        elif isinstance(cmd, Pop):
            for _ in range(cmd.n):
                ctx.pop()
                self.frames.pop()
        elif isinstance(cmd, CheckSat):
            self.last = optimize(ctx)
            self.outcomes.append(self.last)
            self.emit(self.last.status)
            if self.verify:
                self._verify(self.last)
        elif isinstance(cmd, GetObjectives):
            if self.last is None:
                raise RuntimeError("get-objectives before check-sat")
            self.emit(render_objectives(self.last))
        elif isinstance(cmd, GetModel):
            if self.last is None:
                raise RuntimeError("get-model before check-sat")
            self.emit(render_model(self.last.model, self.decls))
        elif isinstance(cmd, SetOption):
            attr = OPTION_KEYS.get(cmd.key)
            if attr is not None:
                value = int(cmd.value) if attr == "branch_limit" else cmd.value
                setattr(self.options, attr, value)

    def _verify(self, outcome: OptimizationOutcome) -> None:
        from .harness.verify import verify_outcome
        for rep in verify_outcome(self.problem(), outcome, self.options):
            self.emit(f"; verify: {rep.name} {rep.verdict}")
            if rep.verdict != "pass":
                self.verify_failures += 1


def run_script(script: Script, options: Optional[Options] = None, out=None,
               verify: bool = False, stats: bool = False) -> int:
    return ScriptRunner(options, out, verify, stats).run(script)
