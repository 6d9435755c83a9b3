"""Cross-check reported optima with plain satisfiability queries."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..arith import NEG_INF, POS_INF, DeltaRational, Infinity
from ..context import Options
from ..engine import decide
from ..formula import LinearTerm
from ..runner import Problem, build_context
from ..script import Cmp

DELTAS = (Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
UNBOUNDED_PROBES = (Fraction(10) ** 3, Fraction(10) ** 6)


@dataclass
class VerificationReport:
    name: str
    lower_check: Optional[bool] = None      # True when the expected unsat held
    equality_check: Optional[bool] = None   # True when the expected sat held
    verdict: str = "pass"
    counter_model: Optional[dict] = None
    notes: list = field(default_factory=list)


def _decision(problem: Problem, extra, options: Optional[Options]):
    opts = Options(seed=options.seed if options else 0,
                   feasibility_limit=options.feasibility_limit if options else 5000)
    p = Problem(problem.decls, problem.constraints() + list(extra), [])
    ctx = build_context(p, opts)
    out = decide(ctx)
    return out.status, out.model


def verify_minimum(problem: Problem, term: LinearTerm, value, attained: bool,
                   maximize: bool = False, name: str = "objective",
                   options: Optional[Options] = None) -> VerificationReport:
    """Check a reported optimum of ``term`` (name-keyed) over ``problem``.

    For a minimum ``v``: ``phi & term < v`` must be unsat and, if attained,
    ``phi & term = v`` sat.  Open infima are checked by sampling
    ``phi & term < v + d`` (sat) and ``phi & term <= v`` (unsat).
    """
    rep = VerificationReport(name)
    t = -term if maximize else term
    if isinstance(value, DeltaRational):
        value = value.r
    if isinstance(value, Infinity):
        v = -value if maximize else value
        if v == POS_INF:
            status, model = _decision(problem, [], options)
            rep.lower_check = status == "unsat"
            rep.counter_model = model
        else:
            rep.lower_check = True
            ok = True
            for n in UNBOUNDED_PROBES:
                status, _ = _decision(problem, [Cmp(t + LinearTerm.const(n), "<")], options)
                ok = ok and status == "sat"
            rep.equality_check = ok
        rep.verdict = "pass" if rep.lower_check and rep.equality_check is not False else "fail"
        return rep
    v = -value if maximize else value
    below = Cmp(t - LinearTerm.const(v), "<" if attained else "<=")
    status, model = _decision(problem, [below], options)
    rep.lower_check = status == "unsat"
    if not rep.lower_check:
        rep.counter_model = model
    if attained:
        status, _ = _decision(problem, [Cmp(t - LinearTerm.const(v), "=")], options)
        rep.equality_check = status == "sat"
    else:
        ok = True
        for d in DELTAS:
            status, _ = _decision(problem, [Cmp(t - LinearTerm.const(v + d), "<")], options)
            if status != "sat":
                ok = False
                rep.notes.append(f"no model with cost < value + {d}")
        rep.equality_check = ok
    rep.verdict = "pass" if rep.lower_check and rep.equality_check else "fail"
    return rep


def verify_outcome(problem: Problem, outcome, options: Optional[Options] = None) -> list:
    """Reports for every resolved objective of an optimization outcome.

    In lexicographic mode each stage is checked with the earlier optima
    frozen as equalities.
    """
    reports = []
    if outcome.status == "unknown":
        return reports
    lex = options is not None and options.mode == "lex"
    frozen = Problem(problem.decls, list(problem.assertions), list(problem.objectives))
    for m, r in zip(problem.objectives, outcome.objectives):
        if r.status == "unresolved":
            continue
        if outcome.status == "unsat":
            rep = verify_minimum(frozen, m.term, NEG_INF if m.maximize else POS_INF,
                                 False, m.maximize, m.name, options)
        else:
            rep = verify_minimum(frozen, m.term, r.value, r.attained, m.maximize, m.name,
                                 options)
        reports.append(rep)
        if lex and isinstance(r.value, DeltaRational):
            frozen.assertions.append(Cmp(m.term - LinearTerm.const(r.value.r), "="))
    return reports
