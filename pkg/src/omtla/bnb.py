"""LP-based branch and bound for integer and mixed linear arithmetic.

All routines run on a :class:`~omtla.simplex.Simplex` whose current bounds
encode the asserted constraint set; branching cuts are pushed through
``mark``/``backtrack`` so the tableau is reused between nodes.  Cut bounds
carry ``("cut", n)`` explanations, which lets infeasible subtrees report
conflicts that skip irrelevant branching levels.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .arith import DeltaRational

OPTIMAL = "optimal"
SUBOPTIMAL = "suboptimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

DEFAULT_BRANCH_LIMIT = 250
# branching depth after which a search gives up; pure branch and bound does
# not terminate on lattice-free sets that are unbounded in integer directions
MAX_DEPTH = 400


@dataclass
class BnbNode:
    """A subproblem: the parent's constraints plus ``cuts``."""
    cuts: tuple = ()
    depth: int = 0
    parent: Optional["BnbNode"] = None


@dataclass
class BnbResult:
    status: str
    value: Optional[DeltaRational] = None
    model: Optional[list] = None
    nodes_explored: int = 0
    branches: int = 0
    restarts: int = 0


@dataclass
class _Search:
    nodes: int = 0
    branches: int = 0
    limit: Optional[int] = None
    ids: itertools.count = field(default_factory=itertools.count)

    def exhausted(self) -> bool:
        return self.limit is not None and self.branches >= self.limit


def _is_cut(why) -> bool:
    return isinstance(why, tuple) and len(why) == 2 and why[0] == "cut"


def branching_var(sx, int_vars):
    """Most fractional integer variable, ties broken by lowest index."""
    best = None
    best_dist = None
    for v in int_vars:
        x = sx.val[v]
        if x.is_integral():
            continue
        f = x.r - (x.r.numerator // x.r.denominator)
        dist = min(f, 1 - f)
        if best is None or dist > best_dist:
            best, best_dist = v, dist
    return best


def strict_below(value: DeltaRational) -> DeltaRational:
    """Upper bound encoding ``x < value``."""
    return DeltaRational(value.r, value.d - 1)


def check_unbounded(sx, cost):
    """Relaxation test: ``(True, None)`` if unbounded, else ``(False, lb)``."""
    m = sx.minimize(cost)
    if m is None:
        return True, None
    return False, m


def _branches(sx, x):
    v = sx.val[x]
    return ((True, DeltaRational(v.floor())), (False, DeltaRational(v.ceil())))


def _assert_cut(sx, x, upper, bound, why):
    if upper:
        return sx.assert_upper(x, bound, why)
    return sx.assert_lower(x, bound, why)


def _dfs(sx, int_vars, cost, search: _Search, depth: int = 0):
    """Depth-first search for an LA-compliant point.

    Returns ``("sol", value, model)``, ``("unsat", reasons)`` or ``("limit",)``.
    With ``cost`` set, every node's relaxation is minimized first.
    """
    search.nodes += 1
    conf = sx.check()
    if conf is not None:
        return ("unsat", set(conf))
    value = None
    if cost is not None:
        value = sx.minimize(cost)
    x = branching_var(sx, int_vars)
    if x is None:
        return ("sol", value, sx.snapshot())
    if search.exhausted() or depth >= MAX_DEPTH:
        return ("limit",)
    search.branches += 1
    results = []
    for upper, bound in _branches(sx, x):
        why = ("cut", next(search.ids))
        mark = sx.mark()
        conf = _assert_cut(sx, x, upper, bound, why)
        if conf is not None:
            r = ("unsat", set(conf))
        else:
            r = _dfs(sx, int_vars, cost, search, depth + 1)
        sx.backtrack(mark)
        if r[0] != "unsat":
            return r
        if why not in r[1]:
            # conflict independent of this branch: skip the sibling
            return r
        results.append(r[1] - {why})
    return ("unsat", results[0] | results[1])


def feasible(sx, int_vars, node_limit: Optional[int] = None):
    """Find an LA-compliant assignment for the current bounds.

    Returns ``("sat", nodes)``, ``("unsat", reasons, nodes)`` or
    ``("unknown", nodes)``.  On success the integral assignment is kept.
    """
    search = _Search(limit=node_limit)
    r = _dfs(sx, int_vars, None, search)
    if r[0] == "sol":
        _restore(sx, r[2])
        return ("sat", search.nodes)
    if r[0] == "unsat":
        return ("unsat", [w for w in r[1] if not _is_cut(w)], search.nodes)
    return ("unknown", search.nodes)


def _restore(sx, model):
    # a model found under cuts still satisfies the looser bounds
    sx.val[:] = model
    sx.feasible = True


def minimize_basic(sx, cost, int_vars, ub=None, model=None) -> BnbResult:
    """Recursive branch and bound with incumbent pruning.

    Each node re-asserts its full cut list from the root, which makes this
    variant a deliberately naive baseline.
    """
    best = {"ub": ub, "model": model}
    stats = {"nodes": 0, "branches": 0, "cut_off": False}

    def solve_node(node: BnbNode):
        stats["nodes"] += 1
        mark = sx.mark()
        try:
            for x, upper, bound in node.cuts:
                if _assert_cut(sx, x, upper, bound, ("cut", -1)) is not None:
                    return
            if sx.check() is not None:
                return
            m = sx.minimize(cost)
            if m is None:
                raise ValueError("relaxation unbounded below; run check_unbounded first")
            if best["ub"] is not None and m >= best["ub"]:
                return
            x = branching_var(sx, int_vars)
            if x is None:
                best["ub"], best["model"] = m, sx.snapshot()
                return
            if node.depth >= MAX_DEPTH:
                stats["cut_off"] = True
                return
            children = [BnbNode(node.cuts + ((x, upper, bound),), node.depth + 1, node)
                        for upper, bound in _branches(sx, x)]
        finally:
            sx.backtrack(mark)
        stats["branches"] += 1
        for child in children:
            solve_node(child)

    solve_node(BnbNode())
    _recheck(sx)
    if stats["cut_off"]:
        return BnbResult(UNKNOWN, best["ub"], best["model"], stats["nodes"], stats["branches"])
    if best["ub"] is None:
        return BnbResult(INFEASIBLE, nodes_explored=stats["nodes"], branches=stats["branches"])
    return BnbResult(OPTIMAL, best["ub"], best["model"], stats["nodes"], stats["branches"])


def _recheck(sx):
    sx.check()


def _improve_loop(sx, cost, int_vars, ub, model, branch_limit=None, lb=None):
    restarts = 0
    nodes = 0
    branches = 0
    remaining = branch_limit
    truncated = branch_limit is not None
    while True:
        if truncated and ub is not None and lb is not None and ub <= lb:
            return BnbResult(OPTIMAL, ub, model, nodes, branches, restarts)
        restarts += 1
        mark = sx.mark()
        conf = None
        if ub is not None:
            conf = sx.assert_upper(cost, strict_below(ub), ("costcut", restarts))
        search = _Search(limit=remaining)
        if conf is not None:
            r = ("unsat", set(conf))
        else:
            r = _dfs(sx, int_vars, cost, search)
        sx.backtrack(mark)
        nodes += search.nodes
        branches += search.branches
        if r[0] == "sol":
            ub, model = r[1], r[2]
            if truncated:
                _recheck(sx)
                status = OPTIMAL if (lb is not None and ub <= lb) else SUBOPTIMAL
                return BnbResult(status, ub, model, nodes, branches, restarts)
            continue
        _recheck(sx)
        if r[0] == "limit":
            if ub is None or not truncated:
                return BnbResult(UNKNOWN, ub, model, nodes, branches, restarts)
            return BnbResult(SUBOPTIMAL, ub, model, nodes, branches, restarts)
        if ub is None:
            return BnbResult(INFEASIBLE, None, None, nodes, branches, restarts)
        return BnbResult(OPTIMAL, ub, model, nodes, branches, restarts)


def minimize_advanced(sx, cost, int_vars, ub=None, model=None) -> BnbResult:
    """Restart the search under a fresh ``cost < ub`` cut after each improvement."""
    return _improve_loop(sx, cost, int_vars, ub, model)


def minimize_truncated(sx, cost, int_vars, ub=None, model=None,
                       branch_limit: int = DEFAULT_BRANCH_LIMIT, lb=None) -> BnbResult:
    """Stop at the first improving solution or after ``branch_limit`` branchings."""
    return _improve_loop(sx, cost, int_vars, ub, model, branch_limit=branch_limit, lb=lb)
