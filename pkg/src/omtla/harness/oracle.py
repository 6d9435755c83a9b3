"""Brute-force optimum oracle, independent of the solver's search code.

Rational parts are handled by enumerating partial truth assignments of the
atoms and projecting each literal conjunction onto the cost with
Fourier-Motzkin elimination (strictness tracked exactly).  Integer
variables are enumerated over their box.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from ..arith import NEG_INF, POS_INF, Infinity
from ..formula import LinearTerm, Sort
from ..script import AndE, BoolConst, BoolVar, Cmp, NotE, OrE

MAX_ATOMS = 12
MAX_ARITH_VARS = 4
SENTINEL = 50
MAX_GRID = 200_000


class OracleRefused(ValueError):
    """The instance is outside the sizes the oracle handles trivially."""


@dataclass(frozen=True)
class OracleResult:
    status: str                 # optimal | unbounded | unsat
    value: object               # Fraction or Infinity (user orientation)
    attained: bool


# -- linear constraints ------------------------------------------------------------
# A constraint is (coeffs: dict name -> Fraction, const: Fraction, strict: bool)
# meaning  sum(coeffs) + const < 0  (strict)  or  <= 0.

def _lin(term, sign=1):
    return {v: c * sign for v, c in term.coeffs}, term.constant * sign


def literal_constraints(cmp: Cmp, value: bool):
    """Alternative constraint lists whose union is ``cmp`` (or its negation)."""
    t_pos = _lin(cmp.term)
    t_neg = _lin(cmp.term, -1)
    le = lambda t: (t[0], t[1], False)   # noqa: E731
    lt = lambda t: (t[0], t[1], True)    # noqa: E731
    rel = cmp.rel
    if value:
        table = {"<=": [[le(t_pos)]], "<": [[lt(t_pos)]], ">=": [[le(t_neg)]],
                 ">": [[lt(t_neg)]], "=": [[le(t_pos), le(t_neg)]]}
    else:
        table = {"<=": [[lt(t_neg)]], "<": [[le(t_neg)]], ">=": [[lt(t_pos)]],
                 ">": [[le(t_pos)]], "=": [[lt(t_pos)], [lt(t_neg)]]}
    return table[rel]


def _normalize(c):
    coeffs, const, strict = c
    coeffs = {v: a for v, a in coeffs.items() if a != 0}
    if coeffs:
        s = max(abs(a) for a in coeffs.values())
        coeffs = {v: a / s for v, a in coeffs.items()}
        const = const / s
    return (tuple(sorted(coeffs.items())), const, strict)


def fm_eliminate(constraints, var):
    pos, neg, rest = [], [], []
    for c in constraints:
        a = dict(c[0]).get(var, 0)
        (pos if a > 0 else neg if a < 0 else rest).append(c)
    out = set(rest)
    for p in pos:
        pc = dict(p[0])
        ap = pc[var]
        for n in neg:
            nc = dict(n[0])
            an = -nc[var]
            coeffs = {}
            for v in set(pc) | set(nc):
                if v == var:
                    continue
                coeffs[v] = pc.get(v, 0) / ap + nc.get(v, 0) / an
            out.add(_normalize((coeffs, p[1] / ap + n[1] / an, p[2] or n[2])))
    return list(out)


def infimum(constraints, objective: dict, obj_const: Fraction, variables):
    """Infimum of ``objective + obj_const`` subject to ``constraints``.

    Returns None when infeasible, else ``(value, attained)`` with value a
    Fraction or NEG_INF.
    """
    z = "\0z"
    cs = [_normalize(c) for c in constraints]
    # z = objective  as two inequalities
    f = dict(objective)
    cs.append(_normalize(({**f, z: Fraction(-1)}, obj_const, False)))
    cs.append(_normalize(({**{v: -a for v, a in f.items()}, z: Fraction(1)}, -obj_const, False)))
    remaining = [v for v in variables]
    while remaining:
        def cost(v):
            p = sum(1 for c in cs if dict(c[0]).get(v, 0) > 0)
            n = sum(1 for c in cs if dict(c[0]).get(v, 0) < 0)
            return p * n - p - n
        v = min(remaining, key=lambda x: (cost(x), x))
        remaining.remove(v)
        cs = fm_eliminate(cs, v)
    lower, lower_strict = None, False
    upper, upper_strict = None, False
    for coeffs, const, strict in cs:
        d = dict(coeffs)
        a = d.get(z, 0)
        if a == 0:
            if const > 0 or (strict and const == 0):
                return None
            continue
        b = -const / a
        if a > 0:
            if upper is None or b < upper or (b == upper and strict):
                upper, upper_strict = b, strict
        else:
            if lower is None or b > lower or (b == lower and strict):
                lower, lower_strict = b, strict
    if lower is not None and upper is not None:
        if lower > upper or (lower == upper and (lower_strict or upper_strict)):
            return None
    if lower is None:
        return NEG_INF, False
    return lower, not lower_strict


# -- Boolean structure ---------------------------------------------------------------

def eval3(e, asg: dict):
    """Three-valued evaluation; atoms missing from ``asg`` are unknown (None)."""
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, (BoolVar, Cmp)):
        return asg.get(e)
    if isinstance(e, NotE):
        v = eval3(e.arg, asg)
        return None if v is None else not v
    if isinstance(e, AndE):
        unknown = False
        for a in e.args:
            v = eval3(a, asg)
            if v is False:
                return False
            if v is None:
                unknown = True
        return None if unknown else True
    if isinstance(e, OrE):
        unknown = False
        for a in e.args:
            v = eval3(a, asg)
            if v is True:
                return True
            if v is None:
                unknown = True
        return None if unknown else False
    raise TypeError(f"unexpected node {e!r}")


def collect_keys(e, out: dict) -> dict:
    if isinstance(e, (BoolVar, Cmp)):
        out.setdefault(e, None)
    elif isinstance(e, NotE):
        collect_keys(e.arg, out)
    elif isinstance(e, (AndE, OrE)):
        for a in e.args:
            collect_keys(a, out)
    return out


def implicants(formula, keys):
    """Partial assignments (dicts) covering every model of ``formula``."""
    out = []

    def rec(i, asg):
        v = eval3(formula, asg)
        if v is False:
            return
        if v is True:
            out.append(dict(asg))
            return
        if i == len(keys):
            return
        k = keys[i]
        for val in (True, False):
            asg[k] = val
            rec(i + 1, asg)
            del asg[k]

    rec(0, {})
    return out


def substitute(e, values: dict):
    """Replace variables in ``values`` by constants; fold ground atoms."""
    if isinstance(e, Cmp):
        if not any(v in values for v, _ in e.term.coeffs):
            return e
        coeffs = {v: c for v, c in e.term.coeffs if v not in values}
        const = e.term.constant + sum(c * values[v] for v, c in e.term.coeffs if v in values)
        if not coeffs:
            return BoolConst(_holds(const, e.rel))
        return Cmp(LinearTerm(coeffs, const), e.rel)
    if isinstance(e, NotE):
        return NotE(substitute(e.arg, values))
    if isinstance(e, AndE):
        return AndE(tuple(substitute(a, values) for a in e.args))
    if isinstance(e, OrE):
        return OrE(tuple(substitute(a, values) for a in e.args))
    return e


def _holds(t: Fraction, rel: str) -> bool:
    return {"<=": t <= 0, "<": t < 0, "=": t == 0, ">=": t >= 0, ">": t > 0}[rel]


def evaluate(e, values: dict, bools: dict) -> bool:
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, BoolVar):
        return bools[e.name]
    if isinstance(e, Cmp):
        t = e.term.constant + sum(c * values[v] for v, c in e.term.coeffs)
        return _holds(t, e.rel)
    if isinstance(e, NotE):
        return not evaluate(e.arg, values, bools)
    if isinstance(e, AndE):
        return all(evaluate(a, values, bools) for a in e.args)
    return any(evaluate(a, values, bools) for a in e.args)


# -- oracle ---------------------------------------------------------------------------

def _rational_min(formula, objective: dict, obj_const, real_vars):
    """Infimum over real variables; ``formula`` may contain Bool variables."""
    keys = list(collect_keys(formula, {}))
    best = None
    for asg in implicants(formula, keys):
        systems = [[]]
        for k, val in asg.items():
            if isinstance(k, BoolVar):
                continue
            alts = literal_constraints(k, val)
            systems = [s + alt for s in systems for alt in alts]
        for cs in systems:
            r = infimum(cs, objective, obj_const, real_vars)
            if r is None:
                continue
            best = r if best is None else _better(r, best)
            if best[0] is NEG_INF:
                return best
    return best


def _better(a, b):
    """Smaller infimum; on ties an attained one wins."""
    if a[0] == NEG_INF:
        return a
    if b[0] == NEG_INF:
        return b
    if a[0] < b[0] or (a[0] == b[0] and a[1] and not b[1]):
        return a
    return b


def top_conjuncts(e):
    if isinstance(e, AndE):
        for a in e.args:
            yield from top_conjuncts(a)
    else:
        yield e


def int_box(assertions, name: str):
    """``(lo, hi, lo_asserted, hi_asserted)`` from top-level bounds on ``name``.

    Missing sides are replaced by the sentinel ``SENTINEL``.
    """
    lo = hi = None
    for a in assertions:
        for c in top_conjuncts(a):
            neg = False
            if isinstance(c, NotE) and isinstance(c.arg, Cmp):
                c, neg = c.arg, True
            if not isinstance(c, Cmp) or len(c.term.coeffs) != 1 or c.term.coeffs[0][0] != name:
                continue
            a_, k = c.term.coeffs[0][1], c.term.constant
            rel = c.rel
            if neg:
                rel = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "=": None}[rel]
                if rel is None:
                    continue
            # a*x + k REL 0  ->  x REL' -k/a
            b = -k / a_
            if a_ < 0:
                rel = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}[rel]
            if rel in ("<=", "<", "="):
                h = math.floor(b) if rel != "<" else math.ceil(b) - 1
                hi = h if hi is None else min(hi, h)
            if rel in (">=", ">", "="):
                l_ = math.ceil(b) if rel != ">" else math.floor(b) + 1
                lo = l_ if lo is None else max(lo, l_)
    return (lo if lo is not None else -SENTINEL, hi if hi is not None else SENTINEL,
            lo is not None, hi is not None)


def oracle_optimum(decls: dict, assertions, term, maximize: bool = False,
                   max_atoms: int = MAX_ATOMS) -> OracleResult:
    """Exact optimum of ``term`` over the models of ``assertions``."""
    arith = [n for n, s in decls.items() if s is not Sort.BOOL]
    if len(arith) > MAX_ARITH_VARS:
        raise OracleRefused(f"{len(arith)} arithmetic variables")
    formula = AndE(tuple(assertions))
    n_atoms = sum(1 for k in collect_keys(formula, {}) if isinstance(k, Cmp))
    if n_atoms > max_atoms:
        raise OracleRefused(f"{n_atoms} atoms")
    sign = -1 if maximize else 1
    objective = {v: c * sign for v, c in term.coeffs}
    obj_const = term.constant * sign
    ints = [n for n in arith if decls[n] is Sort.INT]
    reals = [n for n in arith if decls[n] is Sort.REAL]
    if not ints:
        best = _rational_min(formula, objective, obj_const, reals)
    else:
        best = _grid_min(decls, assertions, formula, objective, obj_const, ints, reals)
    if best is None:
        return OracleResult("unsat", NEG_INF if maximize else POS_INF, False)
    value, attained = best
    if isinstance(value, Infinity):
        return OracleResult("unbounded", POS_INF if maximize else NEG_INF, False)
    return OracleResult("optimal", value * sign, attained)


def _grid_min(decls, assertions, formula, objective, obj_const, ints, reals):
    boxes = [int_box(assertions, n) for n in ints]
    size = 1
    for lo, hi, _, _ in boxes:
        size *= max(hi - lo + 1, 0)
    if size > MAX_GRID:
        raise OracleRefused(f"integer grid of {size} points")
    bools = [n for n, s in decls.items() if s is Sort.BOOL]
    best = None
    best_point = None
    for point in itertools.product(*[range(lo, hi + 1) for lo, hi, _, _ in boxes]):
        values = {n: Fraction(v) for n, v in zip(ints, point)}
        if not reals:
            base = obj_const + sum(c * values[v] for v, c in objective.items())
            # Bool variables: any assignment works
            for bv in itertools.product((False, True), repeat=len(bools)):
                if evaluate(formula, values, dict(zip(bools, bv))):
                    if best is None or base < best[0]:
                        best, best_point = (base, True), point
                    break
            continue
        sub = substitute(formula, values)
        sub_obj = {v: c for v, c in objective.items() if v not in values}
        sub_const = obj_const + sum(c * values[v] for v, c in objective.items() if v in values)
        r = _rational_min(sub, sub_obj, sub_const, reals)
        if r is None:
            continue
        if best is None or _better(r, best) is r:
            best, best_point = r, point
        if isinstance(best[0], Infinity):
            break
    if best is not None and best_point is not None and not isinstance(best[0], Infinity):
        on_face = any((v == lo and not lo_ok) or (v == hi and not hi_ok)
                      for (lo, hi, lo_ok, hi_ok), v in zip(boxes, best_point))
        if on_face:
            values = {n: Fraction(v) for n, v in zip(ints, best_point)}
            if not _ray_unbounded(formula, values, objective, obj_const, ints + reals):
                raise OracleRefused("optimum on the sentinel box boundary")
            return NEG_INF, False
    return best


def _substitute_constraints(cs, values):
    out = []
    for coeffs, const, strict in cs:
        rest = {v: c for v, c in coeffs.items() if v not in values}
        out.append((rest, const + sum(c * values[v] for v, c in coeffs.items() if v in values),
                    strict))
    return out


def _ray_unbounded(formula, values: dict, objective: dict, obj_const, arith) -> bool:
    """Ray check for a feasible integer point on the sentinel face.

    With rational data a mixed-integer set is unbounded in a direction iff it
    is feasible and the rational relaxation is, so it suffices to find a
    literal conjunction that holds at the point (for some completion of the
    real variables) and whose rational infimum is -oo.
    """
    reals = [v for v in arith if v not in values]
    for asg in implicants(formula, list(collect_keys(formula, {}))):
        systems = [[]]
        for k, val in asg.items():
            if not isinstance(k, BoolVar):
                systems = [s + alt for s in systems for alt in literal_constraints(k, val)]
        for cs in systems:
            if infimum(_substitute_constraints(cs, values), {}, Fraction(0), reals) is None:
                continue
            r = infimum(cs, objective, obj_const, arith)
            if r is not None and r[0] == NEG_INF:
                return True
    return False


def lex_oracle(decls: dict, assertions, objectives) -> list:
    """Stage-wise optima with equality freezing; later stages may be unresolved."""
    out = []
    asserts = list(assertions)
    for i, (term, maximize) in enumerate(objectives):
        # each frozen stage adds one unit equality on top of the input's atoms
        r = oracle_optimum(decls, asserts, term, maximize, MAX_ATOMS + i)
        out.append(r)
        if r.status != "optimal" or not r.attained:
            out.extend([None] * (len(objectives) - i - 1))
            break
        asserts.append(Cmp(term - LinearTerm.const(r.value), "="))
    return out
