"""Variables, linear atoms, Boolean structure, abstraction and CNF."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable


class SortError(TypeError):
    pass


class Sort(enum.Enum):
    BOOL = "Bool"
    INT = "Int"
    REAL = "Real"

    @property
    def arithmetic(self) -> bool:
        return self is not Sort.BOOL


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    sort: Sort


class Origin(enum.Enum):
    INPUT = "input"
    TLEMMA = "tlemma"
    LEARNED = "learned"
    COST_BOUND = "cost_bound"
    AUGMENTED = "augmented"


# -- linear terms ---------------------------------------------------------------

class LinearTerm:
    """``sum(coeff * var) + constant`` keyed by variable id, zero-free, id-sorted."""

    __slots__ = ("coeffs", "constant")

    def __init__(self, coeffs=None, constant=0):
        items = {}
        if coeffs:
            for v, c in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
                c = Fraction(c)
                if c:
                    items[v] = items.get(v, 0) + c
        self.coeffs = tuple(sorted((v, c) for v, c in items.items() if c != 0))
        self.constant = Fraction(constant)

    @classmethod
    def var(cls, v: int, coeff=1) -> "LinearTerm":
        return cls({v: coeff})

    @classmethod
    def const(cls, c) -> "LinearTerm":
        return cls(None, c)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        d = self.as_dict()
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return LinearTerm(d, self.constant + other.constant)

    def __neg__(self) -> "LinearTerm":
        return self.scale(-1)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, k) -> "LinearTerm":
        k = Fraction(k)
        return LinearTerm({v: c * k for v, c in self.coeffs}, self.constant * k)

    def variables(self):
        return [v for v, _ in self.coeffs]

    def evaluate(self, values) -> Fraction:
        return self.constant + sum((c * values[v] for v, c in self.coeffs), Fraction(0))

    def __eq__(self, other):
        return (isinstance(other, LinearTerm) and self.coeffs == other.coeffs
                and self.constant == other.constant)

    def __hash__(self):
        return hash((self.coeffs, self.constant))

    def __repr__(self):
        return f"LinearTerm({dict(self.coeffs)}, {self.constant})"


LE, LT, EQ = "<=", "<", "="


@dataclass(frozen=True)
class LinearAtom:
    """Canonical ``sum(coeffs) + constant REL 0`` with REL in {<=, <, =}.

    Coefficients are coprime integers with a positive leading coefficient.
    """

    coeffs: tuple
    constant: Fraction
    relation: str

    @property
    def term(self) -> LinearTerm:
        return LinearTerm(self.coeffs, self.constant)

    def holds(self, values, polarity: bool = True) -> bool:
        t = self.term.evaluate(values)
        if self.relation == LE:
            r = t <= 0
        elif self.relation == LT:
            r = t < 0
        else:
            r = t == 0
        return r if polarity else not r

    def __str__(self):
        parts = [f"{c}*v{v}" for v, c in self.coeffs]
        return f"({' + '.join(parts)} + {self.constant} {self.relation} 0)"


def _primitive_factor(coeffs) -> Fraction:
    """Positive factor turning ``coeffs`` into coprime integers."""
    lcm_den = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for _, c in coeffs), 1)
    g = reduce(math.gcd, (abs(c.numerator) * (lcm_den // c.denominator) for _, c in coeffs), 0)
    return Fraction(lcm_den, g)


def normalize_atom(term: LinearTerm, relation: str):
    """Normalize ``term REL 0`` for REL in {<=, <, =, >=, >}.

    Returns ``(atom, polarity)`` such that the input holds iff ``atom`` holds
    with the given polarity.  Constant terms yield ``(True|False, True)``.
    """
    if relation == ">=":
        term, relation = -term, LE
    elif relation == ">":
        term, relation = -term, LT
    elif relation not in (LE, LT, EQ):
        raise ValueError(f"unknown relation {relation!r}")
    if term.is_constant():
        c = term.constant
        val = {LE: c <= 0, LT: c < 0, EQ: c == 0}[relation]
        return val, True
    k = _primitive_factor(term.coeffs)
    coeffs = tuple((v, c * k) for v, c in term.coeffs)
    const = term.constant * k
    polarity = True
    if coeffs[0][1] < 0:
        coeffs = tuple((v, -c) for v, c in coeffs)
        const = -const
        # t <= 0  <=>  not(-t < 0);   t < 0  <=>  not(-t <= 0)
        if relation == LE:
            relation, polarity = LT, False
        elif relation == LT:
            relation, polarity = LE, False
    return LinearAtom(coeffs, const, relation), polarity


# -- Boolean structure --------------------------------------------------------

class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class AtomF(Formula):
    atom: LinearAtom


@dataclass(frozen=True)
class Prop(Formula):
    """Propositional variable (a declared Bool or an abstracted atom)."""
    var: int


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


def mk_not(f: Formula) -> Formula:
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def mk_and(args: Iterable[Formula]) -> Formula:
    out = []
    for a in args:
        if isinstance(a, Const):
            if not a.value:
                return FALSE
            continue
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def mk_or(args: Iterable[Formula]) -> Formula:
    out = []
    for a in args:
        if isinstance(a, Const):
            if a.value:
                return TRUE
            continue
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def atom_formula(atom, polarity: bool) -> Formula:
    """Formula for a normalized atom result (may be a Boolean constant)."""
    if isinstance(atom, bool):
        return Const(atom == polarity)
    f = AtomF(atom)
    return f if polarity else Not(f)


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Push negations to the leaves."""
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return mk_and(parts) if positive else mk_or(parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return mk_or(parts) if positive else mk_and(parts)
    if isinstance(f, Const):
        return f if positive else Const(not f.value)
    return f if positive else Not(f)


def evaluate(f: Formula, props: dict) -> bool:
    """Evaluate a propositional formula under ``props: var -> bool``."""
    if isinstance(f, Prop):
        return props[f.var]
    if isinstance(f, Not):
        return not evaluate(f.arg, props)
    if isinstance(f, And):
        return all(evaluate(a, props) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, props) for a in f.args)
    if isinstance(f, Const):
        return f.value
    raise TypeError(f"cannot evaluate {f!r} propositionally")


# -- abstraction ----------------------------------------------------------------

class BooleanAbstraction:
    """Bijection between linear atoms and propositional variables."""

    def __init__(self, new_var: Callable[[], int]):
        self._new_var = new_var
        self.atom_to_prop: dict = {}
        self.prop_to_atom: dict = {}

    def prop_for(self, atom: LinearAtom) -> int:
        p = self.atom_to_prop.get(atom)
        if p is None:
            p = self._new_var()
            self.atom_to_prop[atom] = p
            self.prop_to_atom[p] = atom
        return p

    def abstract(self, f: Formula) -> Formula:
        if isinstance(f, AtomF):
            return Prop(self.prop_for(f.atom))
        if isinstance(f, Not):
            return mk_not(self.abstract(f.arg))
        if isinstance(f, And):
            return mk_and(self.abstract(a) for a in f.args)
        if isinstance(f, Or):
            return mk_or(self.abstract(a) for a in f.args)
        return f

    def refine(self, assignment) -> list:
        """Map ``{prop: bool}`` (or signed literals) to ``[(atom, polarity)]``."""
        items = assignment.items() if isinstance(assignment, dict) else (
            (abs(l), l > 0) for l in assignment)
        out = []
        for p, val in items:
            if p not in self.prop_to_atom:
                raise KeyError(f"unknown proposition {p}")
            out.append((self.prop_to_atom[p], val))
        return out

    def is_atom(self, p: int) -> bool:
        return p in self.prop_to_atom


# -- CNF ----------------------------------------------------------------------

class Tseitin:
    """Definitional CNF encoder with a shared cache of auxiliary variables."""

    def __init__(self, new_var: Callable[[], int]):
        self._new_var = new_var
        self._cache: dict = {}

    def encode(self, f: Formula):
        """Return ``(definitional_clauses, top_clauses)`` for NNF-normalized ``f``."""
        defs: list = []
        tops: list = []
        f = nnf(f)
        conjuncts = f.args if isinstance(f, And) else (f,)
        for c in conjuncts:
            if isinstance(c, Const):
                if not c.value:
                    tops.append([])
                continue
            disjuncts = c.args if isinstance(c, Or) else (c,)
            clause = []
            for d in disjuncts:
                lit = self._lit(d, defs)
                if -lit in clause:
                    clause = None
                    break
                if lit not in clause:
                    clause.append(lit)
            if clause is not None:
                tops.append(clause)
        return defs, tops

    def _lit(self, f: Formula, defs: list) -> int:
        if isinstance(f, Prop):
            return f.var
        if isinstance(f, Not):
            return -self._lit(f.arg, defs)
        if isinstance(f, Const):
            # only reachable inside n-ary nodes that mk_* did not simplify
            raise ValueError("constant below top level")
        cached = self._cache.get(f)
        if cached is not None:
            return cached
        kids = [self._lit(a, defs) for a in f.args]
        a = self._new_var()
        if isinstance(f, And):
            for k in kids:
                defs.append([-a, k])
            defs.append([a] + [-k for k in kids])
        elif isinstance(f, Or):
            defs.append([-a] + kids)
            for k in kids:
                defs.append([a, -k])
        else:
            raise TypeError(f"unexpected node {f!r}")
        self._cache[f] = a
        return a


def to_cnf(f: Formula, new_var: Callable[[], int]) -> list:
    """Equisatisfiable CNF of a propositional formula as a list of int clauses."""
    defs, tops = Tseitin(new_var).encode(f)
    return defs + tops
