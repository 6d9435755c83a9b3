"""Solver context: declarations, assertions, frames and objectives."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .arith import NEG_INF, POS_INF, DeltaRational
from .formula import (EQ, LT, BooleanAbstraction, Formula, LinearAtom, LinearTerm, Origin,
                      Prop, Sort, SortError, Tseitin, Variable, atom_formula, mk_and, mk_not,
                      normalize_atom)
from .sat import InterfaceError, SatSolver
from .theory import LATheory


@dataclass
class Options:
    search: str = "lin"            # lin | bin | ada
    bnb: str = "advanced"          # basic | advanced | truncated
    branch_limit: int = 250
    mode: str = "boxed"            # single | boxed | lex
    seed: int = 0
    # adaptive search tunables
    ada_lin_shrink: Fraction = Fraction(1, 2)
    ada_bin_gain: Fraction = Fraction(1, 8)
    max_consecutive_bin: int = 2
    bin_max_consecutive_bin: int = 4
    gc_ratio: float = 0.5
    feasibility_limit: int = 5000


@dataclass
class Statistics:
    sat_assignments: int = 0
    minimize_calls: int = 0
    learned_cost_clauses: int = 0
    pivots_decided: int = 0
    bnb_nodes: int = 0
    restarts: int = 0
    solve_calls: int = 0
    conflicts: int = 0

    FIELDS = ("sat_assignments", "minimize_calls", "learned_cost_clauses", "pivots_decided",
              "bnb_nodes", "restarts", "solve_calls", "conflicts")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


@dataclass(eq=False)
class Objective:
    name: str
    term: LinearTerm               # the minimized term (negated for maximize)
    cost: Variable
    sx: int
    maximize: bool = False
    lower: object = NEG_INF
    upper: object = POS_INF
    frame: int = 0
    # per-run state
    l: object = NEG_INF
    u: object = POS_INF
    best: object = POS_INF
    best_model: Optional[dict] = None
    active: bool = True

    @property
    def is_int(self) -> bool:
        return self.cost.sort is Sort.INT


class SolverContext:
    """Owns the SAT engine, the arithmetic theory and the assertion stack."""

    def __init__(self, options: Optional[Options] = None):
        self.options = options or Options()
        self.sat = SatSolver(seed=self.options.seed, gc_ratio=self.options.gc_ratio)
        self.theory = LATheory(self.sat, self.options.feasibility_limit)
        self.vars: list = []
        self.by_name: dict = {}
        self.sx_of: dict = {}
        self.prop_of: dict = {}
        self.abstraction = BooleanAbstraction(self.sat.new_var)
        self.tseitin = Tseitin(self.sat.new_var)
        self.objectives: list = []
        self.stats = Statistics()
        self.depth = 0
        self._n_cost = 0
        self.engine_props: set = set()     # atoms that only occur as learned cost bounds
        self.decide_cost_bounds = True
        self.assertions: list = [[]]
        self.revision = 0           # bumped by every user-visible change of the query
        self.last_outcome = None    # (key, outcome) of the last decided optimize call

    # -- declarations ---------------------------------------------------------

    def declare(self, name: str, sort: Sort) -> Variable:
        if name in self.by_name:
            raise SortError(f"variable {name!r} already declared")
        self.revision += 1
        v = Variable(len(self.vars), name, sort)
        self.vars.append(v)
        self.by_name[name] = v
        if sort is Sort.BOOL:
            self.prop_of[v.id] = self.sat.new_var()
        else:
            self.sx_of[v.id] = self.theory.new_var(sort is Sort.INT)
        return v

    def var(self, name: str) -> Variable:
        return self.by_name[name]

    def bool_formula(self, v: Variable) -> Formula:
        if v.sort is not Sort.BOOL:
            raise SortError(f"{v.name} is not Bool")
        return Prop(self.prop_of[v.id])

    # -- atoms ----------------------------------------------------------------

    def is_int_term(self, term: LinearTerm) -> bool:
        return all(self.vars[v].sort is Sort.INT and c.denominator == 1 for v, c in term.coeffs)

    def atom(self, term: LinearTerm, relation: str) -> Formula:
        """Abstracted formula for ``term REL 0`` (REL in <=, <, =, >=, >)."""
        self.revision += 1
        for v, _ in term.coeffs:
            if self.vars[v].sort is Sort.BOOL:
                raise SortError(f"Boolean variable {self.vars[v].name} in arithmetic term")
        atom, polarity = normalize_atom(term, relation)
        if isinstance(atom, bool):
            return atom_formula(atom, polarity)
        p = self.atom_prop(atom)
        return Prop(p) if polarity else mk_not(Prop(p))

    def atom_prop(self, atom: LinearAtom, engine: bool = False) -> int:
        known = atom in self.abstraction.atom_to_prop
        p = self.abstraction.prop_for(atom)
        if engine and not known:
            self.engine_props.add(p)
            self.sat.set_decision(p, self.decide_cost_bounds)
        elif not engine and p in self.engine_props:
            self.engine_props.discard(p)
            self.sat.set_decision(p, True)
        if not known:
            sx_coeffs = tuple((self.sx_of[v], c) for v, c in atom.coeffs)
            self.theory.register(p, atom, sx_coeffs, self.is_int_term(atom.term))
            if atom.relation == EQ:
                self._trichotomy(atom, p)
        return p

    def _trichotomy(self, atom: LinearAtom, p: int) -> None:
        # a false equality must be witnessed by one strict side
        t = atom.term
        lits = [p]
        for side in (t, -t):
            a, pol = normalize_atom(side, LT)
            q = self.atom_prop(a)
            lits.append(q if pol else -q)
        self.sat._add(lits, Origin.TLEMMA, learnt=False, guard=None)

    def set_cost_bound_decisions(self, flag: bool) -> None:
        """Whether the SAT search may branch on engine-created cost bounds.

        Boxed runs need it (their cost clause has several cost-bound
        literals); in other runs those atoms are only ever propagated.
        """
        self.decide_cost_bounds = flag
        for p in self.engine_props:
            self.sat.set_decision(p, flag)

    def cost_bound_lit(self, obj: Objective, bound: DeltaRational) -> int:
        """Literal for ``cost < bound`` (``bound`` with delta part 0 or 1)."""
        rel = LT if bound.d <= 0 else "<="
        atom, pol = normalize_atom(LinearTerm({obj.cost.id: 1}, -bound.r), rel)
        p = self.atom_prop(atom, engine=True)
        return p if pol else -p

    # -- assertions and frames ------------------------------------------------

    def assert_formula(self, f: Formula) -> None:
        self.revision += 1
        self.assertions[-1].append(f)
        f = self.abstraction.abstract(f)
        defs, tops = self.tseitin.encode(f)
        for c in defs:
            self.sat._add(c, Origin.INPUT, learnt=False, guard=None)
        for c in tops:
            self.sat.add_clause(c, Origin.INPUT)

    def push(self) -> None:
        self.revision += 1
        self.sat.push()
        self.depth += 1
        self.assertions.append([])

    def pop(self) -> None:
        if self.depth == 0:
            raise InterfaceError("pop without matching push")
        self.revision += 1
        self.sat.pop()
        self.depth -= 1
        self.assertions.pop()
        self.objectives = [o for o in self.objectives if o.frame <= self.depth]

    # -- objectives -----------------------------------------------------------

    def add_objective(self, term: LinearTerm, maximize: bool = False, name: Optional[str] = None,
                      lower=None, upper=None) -> Objective:
        """Register ``minimize term`` (``maximize`` minimizes ``-term``).

        ``lower``/``upper`` are bounds on the user-facing term value.
        """
        for v, _ in term.coeffs:
            if self.vars[v].sort is Sort.BOOL:
                raise SortError(f"Boolean variable {self.vars[v].name} in objective")
        mterm = -term if maximize else term
        if len(mterm.coeffs) == 1 and mterm.coeffs[0][1] == 1 and mterm.constant == 0:
            cost = self.vars[mterm.coeffs[0][0]]
        else:
            self._n_cost += 1
            sort = Sort.INT if self.is_int_term(mterm) and mterm.constant.denominator == 1 \
                else Sort.REAL
            cost = self.declare(f"__cost{self._n_cost}", sort)
            definition = self.atom(LinearTerm({cost.id: 1}) - mterm, EQ)
            defs, tops = self.tseitin.encode(self.abstraction.abstract(definition))
            for c in defs + tops:
                self.sat._add(c, Origin.INPUT, learnt=False, guard=None)
        lo, hi = lower, upper
        if maximize:
            lo, hi = (-upper if upper is not None else None), (-lower if lower is not None else None)
        name = name or f"obj{len(self.objectives) + 1}"
        obj = Objective(name, mterm, cost, self.sx_of[cost.id], maximize,
                        frame=self.depth)
        cost_term = LinearTerm({cost.id: 1})
        bounds = []
        if lo is not None:
            obj.lower = DeltaRational(Fraction(lo))
            bounds.append(mk_not(self.atom(cost_term - LinearTerm.const(lo), LT)))
        if hi is not None:
            obj.upper = DeltaRational(Fraction(hi))
            bounds.append(self.atom(cost_term - LinearTerm.const(hi), LT))
        if bounds:
            self.assert_formula(mk_and(bounds))
        self.objectives.append(obj)
        return obj

    # -- models ---------------------------------------------------------------

    def model_from(self, snapshot=None) -> dict:
        """Concrete model of the declared (non-internal) variables."""
        values = self.theory.concrete_values(snapshot)
        out = {}
        for v in self.vars:
            if v.name.startswith("__"):
                continue
            if v.sort is Sort.BOOL:
                out[v.name] = self.sat.lit_value(self.prop_of[v.id]) > 0
            else:
                out[v.name] = values[self.sx_of[v.id]]
        return out

    def evaluate_term(self, term: LinearTerm, model: dict) -> Fraction:
        vals = {v: model[self.vars[v].name] for v, _ in term.coeffs}
        return term.evaluate(vals)
