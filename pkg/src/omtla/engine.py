"""Inline OMT driver on top of the CDCL(T) engine.

One optimization call assumes a fresh call variable ``A``; every cost
bound is learned as the augmented clause ``-A | C`` so that later calls can
keep all other learned clauses.  Minimization happens on every
theory-consistent total assignment through the ``on_model`` hook, and
binary search decides the pivot atom right above the assumption levels.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass, field
from fractions import Fraction
from typing import Optional

from . import bnb
from .arith import NEG_INF, DeltaRational, is_finite
from .context import Objective, SolverContext
from .formula import EQ, LE, LT, LinearTerm, Origin
from .sat import SAT, STOP, UNKNOWN, UNSAT, InterfaceError

LIN, BIN, ADA = "lin", "bin", "ada"


class _Incomplete(Exception):
    """A minimizer gave up; the optimization call ends as unknown."""


@dataclass
class ObjectiveResult:
    name: str
    value: object                  # DeltaRational or Infinity, user orientation
    attained: bool
    model: Optional[dict]
    status: str = "optimal"        # optimal | unbounded | unresolved | unsat | unknown

    @property
    def real_value(self):
        return self.value.r if isinstance(self.value, DeltaRational) else self.value


@dataclass
class OptimizationOutcome:
    status: str
    objectives: list = field(default_factory=list)
    model: Optional[dict] = None


@dataclass
class PivotState:
    lit: Optional[int] = None
    pivot: Optional[Fraction] = None


def bound_of(value: DeltaRational) -> DeltaRational:
    """Normalize a minimum to the delta form used for ``cost < bound``."""
    return DeltaRational(value.r, 0 if value.d == 0 else 1)


def _user_value(obj: Objective, v):
    return -v if obj.maximize else v


# -- range updating and pivoting ----------------------------------------------

def update_range(ctx: SolverContext, obj: Objective, root: int) -> None:
    """Tighten ``[l, u[`` from cost-bound literals assigned at or below ``root``."""
    sat, theory = ctx.sat, ctx.theory
    for p in theory.on_var.get(obj.sx, ()):
        val = sat.lit_value(p)
        if val == 0 or sat.level[p] > root:
            continue
        _, rel, k = theory.atoms[p]
        if rel == LT:
            if val > 0:
                obj.u = min(obj.u, DeltaRational(k))
            else:
                obj.l = max(obj.l, DeltaRational(k))
        elif rel == LE:
            if val > 0:
                obj.u = min(obj.u, DeltaRational(k, 1))
            else:
                obj.l = max(obj.l, DeltaRational(k, 1))
        elif val > 0:
            obj.u = min(obj.u, DeltaRational(k, 1))
            obj.l = max(obj.l, DeltaRational(k))


def int_range(l, u):
    """Inclusive integer range ``[L, U]`` inside ``[l, u[``."""
    return l.ceil(), u.ceil() - 1


def choose_pivot(obj: Objective):
    """Pivot value strictly inside the current range, or None."""
    l, u = obj.l, obj.u
    if not (is_finite(l) and is_finite(u)):
        return None
    if obj.is_int:
        lo, hi = int_range(l, u)
        if hi - lo < 1:
            return None
        return Fraction((lo + hi + 1) // 2)
    if l.r >= u.r:
        return None
    return (l.r + u.r) / 2


def _width(obj: Objective, l, u):
    if not (is_finite(l) and is_finite(u)):
        return None
    if obj.is_int:
        lo, hi = int_range(l, u)
        return Fraction(max(hi - lo + 1, 0))
    return u.r - l.r


class SearchController:
    """Decides between linear and binary steps (BinSearchMode)."""

    def __init__(self, ctx: SolverContext, obj: Objective, mode: str, root: int):
        self.ctx = ctx
        self.obj = obj
        self.mode = mode
        self.root = root
        opts = ctx.options
        self.max_bin = opts.max_consecutive_bin if mode == ADA else opts.bin_max_consecutive_bin
        self.lin_shrink = opts.ada_lin_shrink
        self.bin_gain = opts.ada_bin_gain
        self.piv = PivotState()
        self.kind = None
        self.step_range = None
        self.consecutive_bin = 0
        self.last_shrink = None
        self.last_gain = None
        self.trace: list = []

    def binsearch_mode(self):
        """``(LIN, None)`` or ``(BIN, pivot)`` for the next step."""
        if self.mode == LIN:
            return LIN, None
        pivot = choose_pivot(self.obj)
        if pivot is None:
            return LIN, None
        if self.consecutive_bin >= self.max_bin:
            return LIN, None
        if self.mode == BIN:
            return BIN, pivot
        if self.kind == BIN:
            if self.last_gain is not None and self.last_gain < self.bin_gain:
                return LIN, None
            return BIN, pivot
        if self.kind == LIN and self.last_shrink is not None and self.last_shrink < self.lin_shrink:
            return BIN, pivot
        return LIN, None

    def _finish_step(self, old, new):
        obj = self.obj
        w_old = _width(obj, *old)
        w_new = _width(obj, *new)
        if self.kind == BIN:
            self.consecutive_bin += 1
            gain = None
            if w_old:
                u_old, u_new = old[1], new[1]
                gain = (u_old.r - u_new.r) / w_old if is_finite(u_new) else Fraction(1)
            self.last_gain = gain
        else:
            self.consecutive_bin = 0
            self.last_shrink = None
            if w_old and w_new is not None:
                self.last_shrink = (w_old - w_new) / w_old

    def hook(self, sat):
        obj = self.obj
        update_range(self.ctx, obj, self.root)
        rng = (obj.l, obj.u)
        if self.kind is not None and rng == self.step_range:
            # same step resumed after a restart or an unrelated backjump
            if self.kind == BIN and self.piv.lit is not None and sat.lit_value(self.piv.lit) == 0:
                return self.piv.lit
            return None
        if self.kind is not None:
            self._finish_step(self.step_range, rng)
        kind, pivot = self.binsearch_mode()
        self.trace.append((kind, pivot))
        self.kind = kind
        self.step_range = rng
        self.piv = PivotState()
        if kind == LIN:
            return None
        lit = self.ctx.cost_bound_lit(obj, DeltaRational(pivot))
        if sat.lit_value(lit) != 0:
            self.kind = LIN
            return None
        self.piv = PivotState(lit, pivot)
        self.ctx.stats.pivots_decided += 1
        return lit


# -- one optimization call ------------------------------------------------------

class _Run:
    """A single CDCL(T) search under a fresh call assumption."""

    def __init__(self, ctx: SolverContext, objectives, boxed: bool, search: str = LIN,
                 incumbents=None):
        self.ctx = ctx
        self.sat = ctx.sat
        self.theory = ctx.theory
        self.objectives = list(objectives)
        self.boxed = boxed
        self.search = search if not boxed else LIN
        self.call = self.sat.new_var()
        self.assumptions = list(self.sat.frames) + [self.call]
        self.root = len(self.assumptions)
        self.box_pending = False
        self.assignments_seen = 0
        self.model = None
        for obj in self.objectives:
            obj.l = obj.lower
            obj.u = obj.upper
            obj.best = obj.upper
            obj.best_model = None
            obj.active = True
        self.pending = []
        for obj, (value, model) in (incumbents or {}).items():
            obj.best = value
            obj.best_model = model
            self.pending.append(([self.ctx.cost_bound_lit(obj, bound_of(value)), -self.call],
                                 Origin.AUGMENTED, self.call))
            ctx.stats.learned_cost_clauses += 1

    # minimization of one objective on the current assignment
    def _minimize(self, obj: Objective, base):
        ctx, sx = self.ctx, self.theory.sx
        ctx.stats.minimize_calls += 1
        int_vars = self.theory.int_vars
        if not int_vars:
            m = sx.minimize(obj.sx)
            if m is None:
                return bnb.UNBOUNDED, None, base
            return bnb.OPTIMAL, m, sx.snapshot()
        unbounded, lb = bnb.check_unbounded(sx, obj.sx)
        if unbounded:
            sx.check()
            return bnb.UNBOUNDED, None, base
        opts = ctx.options
        ub = base[obj.sx]
        if opts.bnb == "basic":
            r = bnb.minimize_basic(sx, obj.sx, int_vars, ub, base)
        elif opts.bnb == "truncated":
            r = bnb.minimize_truncated(sx, obj.sx, int_vars, ub, base, opts.branch_limit, lb)
        else:
            r = bnb.minimize_advanced(sx, obj.sx, int_vars, ub, base)
        ctx.stats.bnb_nodes += r.nodes_explored
        sx.check()
        if r.status == bnb.UNKNOWN:
            raise _Incomplete()
        return r.status, r.value, r.model

    def _probe(self, obj: Objective) -> bool:
        """Is ``cost < u`` consistent with the current assignment?"""
        sx = self.theory.sx
        mark = sx.mark()
        upper = DeltaRational(obj.u.r, obj.u.d - 1)
        ok = sx.assert_upper(obj.sx, upper, "probe") is None and sx.check() is None
        sx.backtrack(mark)
        sx.check()
        return ok

    def _improve(self, obj: Objective, value, snapshot) -> bool:
        if not value < obj.best:
            return False
        obj.best = value
        obj.best_model = self.ctx.model_from(snapshot)
        obj.u = bound_of(value)
        return True

    def _cost_clause(self, lits):
        self.ctx.stats.learned_cost_clauses += 1
        return (lits + [-self.call], Origin.AUGMENTED, self.call)

    def on_model(self):
        ctx = self.ctx
        ctx.stats.sat_assignments += 1
        self.assignments_seen += 1
        sx = self.theory.sx
        base = sx.snapshot()
        if not self.objectives:
            self.model = ctx.model_from(base)
            return STOP
        if not self.boxed:
            obj = self.objectives[0]
            status, value, snap = self._minimize(obj, base)
            if status == bnb.UNBOUNDED:
                obj.best, obj.best_model, obj.active = NEG_INF, ctx.model_from(base), False
                return STOP
            if status == bnb.INFEASIBLE or value is None:
                raise RuntimeError("minimizer found no solution on a consistent assignment")
            if not self._improve(obj, value, snap):
                raise RuntimeError("cost bound did not progress")
            return [self._cost_clause([ctx.cost_bound_lit(obj, obj.u)])]
        # minimize over the assignment to the original atoms only: learned
        # cost bounds of the other objectives must not constrain this one
        mark = sx.mark()
        try:
            if ctx.engine_props:
                for s in dict.fromkeys(o.sx for o in self.objectives):
                    self.theory.rebuild_bounds(s, ctx.engine_props)
                if sx.check() is not None:
                    raise RuntimeError("relaxed cost bounds became infeasible")
            out = []
            for obj in self.objectives:
                if not obj.active:
                    continue
                if is_finite(obj.u) and not self._probe(obj):
                    continue
                status, value, snap = self._minimize(obj, base)
                if status == bnb.UNBOUNDED:
                    obj.best, obj.best_model, obj.active = NEG_INF, ctx.model_from(base), False
                    continue
                old = obj.u
                if self._improve(obj, value, snap) and is_finite(old):
                    # (cost < u_new) -> (cost < u_old) re-enables older clauses
                    out.append(([-ctx.cost_bound_lit(obj, obj.u), ctx.cost_bound_lit(obj, old)],
                                Origin.TLEMMA, None))
        finally:
            sx.backtrack(mark)
            sx.check()
        active = [o for o in self.objectives if o.active]
        if not active:
            return STOP
        # the new clause is stronger than the previous box clause: drop it
        if self.box_pending and self.sat.last_clause is not None:
            self.sat.last_clause.deleted = True
        self.box_pending = True
        out.append(self._cost_clause([ctx.cost_bound_lit(o, o.u) for o in active]))
        return out

    def execute(self) -> str:
        ctx, sat = self.ctx, self.sat
        ctx.stats.solve_calls += 1
        for lits, origin, guard in self.pending:
            sat._add(lits, origin, learnt=True, guard=guard)
        ctx.set_cost_bound_decisions(self.boxed)
        hook = None
        if not self.boxed and self.objectives and self.search != LIN:
            self.controller = SearchController(ctx, self.objectives[0], self.search, self.root)
            hook = self.controller.hook
        try:
            res = sat.solve(self.assumptions, self.on_model, hook)
        except _Incomplete:
            res = None
        sat.retire(self.call)
        self.sync_stats()
        if res is None or res.status == UNKNOWN:
            return UNKNOWN
        if not self.objectives:
            return res.status
        if any(o.best_model is not None for o in self.objectives):
            return SAT
        return UNSAT

    def sync_stats(self):
        st, sat = self.ctx.stats, self.sat
        st.restarts = sat.stats.restarts
        st.conflicts = sat.stats.conflicts


# -- entry points -------------------------------------------------------------

def _result(obj: Objective, status: str) -> ObjectiveResult:
    if status == UNSAT:
        v = _user_value(obj, obj.upper)
        return ObjectiveResult(obj.name, v, False, None, "unsat")
    if status == UNKNOWN:
        return ObjectiveResult(obj.name, _user_value(obj, obj.best), False, obj.best_model, "unknown")
    best = obj.best
    if not is_finite(best):
        return ObjectiveResult(obj.name, _user_value(obj, best), False, obj.best_model,
                               "unbounded" if best == NEG_INF else "optimal")
    # an open infimum's delta coefficient depends on the search path: report 0 or 1
    best = bound_of(best)
    return ObjectiveResult(obj.name, _user_value(obj, best), best.d == 0, obj.best_model)


def _run(ctx, objectives, boxed, search=LIN, incumbents=None):
    run = _Run(ctx, objectives, boxed, search, incumbents)
    status = run.execute()
    return run, status


def decide(ctx: SolverContext) -> OptimizationOutcome:
    """Plain satisfiability check (no objectives)."""
    run, status = _run(ctx, [], False)
    return OptimizationOutcome(status, [], run.model)


def minimize_single(ctx: SolverContext, obj: Objective, mode: str = LIN,
                    incumbent=None) -> OptimizationOutcome:
    incumbents = {obj: incumbent} if incumbent is not None else None
    _, status = _run(ctx, [obj], False, mode, incumbents)
    res = _result(obj, status)
    return OptimizationOutcome(status, [res], obj.best_model)


def minimize_boxed(ctx: SolverContext, objectives) -> OptimizationOutcome:
    objectives = list(objectives)
    if not objectives:
        raise InterfaceError("boxed optimization needs at least one objective")
    _, status = _run(ctx, objectives, True)
    results = [_result(o, status) for o in objectives]
    return OptimizationOutcome(status, results, objectives[0].best_model)


def minimize_sequential(ctx: SolverContext, objectives, mode: str = LIN) -> OptimizationOutcome:
    """Independent single-objective runs, one per objective."""
    results = []
    status = UNSAT
    for obj in objectives:
        out = minimize_single(ctx, obj, mode)
        results.append(out.objectives[0])
        status = out.status
        if status != SAT:
            break
    if status != SAT:
        results = [_result(o, status) for o in objectives]
    return OptimizationOutcome(status, results, results[0].model if results else None)


def minimize_lex(ctx: SolverContext, objectives, mode: str = LIN) -> OptimizationOutcome:
    """Stage-wise lexicographic minimization with equality freezing."""
    objectives = list(objectives)
    results = []
    pushed = 0
    status = SAT
    incumbent = None
    try:
        for i, obj in enumerate(objectives):
            out = minimize_single(ctx, obj, mode, incumbent)
            status = out.status
            if status != SAT:
                if i == 0 or status == UNKNOWN:
                    results = [_result(o, status) for o in objectives]
                break
            res = out.objectives[0]
            results.append(res)
            if not is_finite(obj.best) or not res.attained:
                for rest in objectives[i + 1:]:
                    results.append(ObjectiveResult(rest.name, None, False, None, "unresolved"))
                break
            if i + 1 == len(objectives):
                break
            ctx.push()
            pushed += 1
            frozen = LinearTerm({obj.cost.id: 1}) - LinearTerm.const(obj.best.r)
            ctx.assert_formula(ctx.atom(frozen, EQ))
            nxt = objectives[i + 1]
            model = obj.best_model
            value = DeltaRational(ctx.evaluate_term(nxt.term, model))
            incumbent = (value, model)
    finally:
        for _ in range(pushed):
            ctx.pop()
    return OptimizationOutcome(status, results, results[0].model if results else None)


def optimize(ctx: SolverContext, mode: Optional[str] = None,
             search: Optional[str] = None) -> OptimizationOutcome:
    """Optimize all active objectives of ``ctx`` in the configured mode."""
    mode = mode or ctx.options.mode
    search = search or ctx.options.search
    objectives = list(ctx.objectives)
    # an identical query on an unchanged context has the answer of the last call
    key = (ctx.revision, mode, search, astuple(ctx.options), [id(o) for o in objectives])
    if ctx.last_outcome is not None and ctx.last_outcome[0] == key:
        return ctx.last_outcome[1]
    if not objectives:
        out = decide(ctx)
    elif mode == "boxed":
        out = minimize_boxed(ctx, objectives)
    elif mode == "lex":
        out = minimize_lex(ctx, objectives, search)
    elif mode == "single":
        out = minimize_sequential(ctx, objectives, search)
    else:
        raise InterfaceError(f"unknown optimization mode {mode!r}")
    # lex freezes stages in frames of its own; those leave the query unchanged
    ctx.revision = key[0]
    if out.status in ("sat", "unsat"):
        ctx.last_outcome = (key, out)
    return out
