import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omtla import bnb
from omtla.arith import DeltaRational as D
from omtla.simplex import Simplex

MINIMIZERS = {
    "basic": lambda sx, c, iv: bnb.minimize_basic(sx, c, iv),
    "advanced": lambda sx, c, iv: bnb.minimize_advanced(sx, c, iv),
    "truncated": lambda sx, c, iv: _converged_truncated(sx, c, iv),
}


def _converged_truncated(sx, cost, int_vars, limit=250, ub=None, model=None):
    # the engine's outer loop: keep calling with the incumbent as the bound
    _, lb = bnb.check_unbounded(sx, cost)
    while True:
        r = bnb.minimize_truncated(sx, cost, int_vars, ub, model, limit, lb)
        if r.status != bnb.SUBOPTIMAL:
            if r.status == bnb.INFEASIBLE and ub is not None:
                return bnb.BnbResult(bnb.OPTIMAL, ub, model)
            return r
        if ub is not None and not r.value < ub:
            raise AssertionError("truncated search made no progress")
        ub, model = r.value, r.model


def lp(rows, n, int_vars=True, objective=None):
    """rows: (coeffs, k) meaning sum(coeffs*x) + k <= 0."""
    sx = Simplex()
    xs = [sx.new_var(int_vars) for _ in range(n)]
    for coeffs, k in rows:
        s = sx.slack_for(tuple((xs[i], F(c)) for i, c in enumerate(coeffs) if c))
        assert sx.assert_upper(s, D(-k), None) is None
    cost = sx.slack_for(tuple((xs[i], F(c)) for i, c in enumerate(objective) if c))
    assert sx.check() is None
    return sx, xs, cost


def instance_3x_2y():
    # 3x + 2y, x, y >= 0 integer, x + y >= 5/2
    return lp([((-1, 0), 0), ((0, -1), 0), ((-1, -1), F(5, 2))], 2, objective=(3, 2))


@pytest.mark.parametrize("variant", sorted(MINIMIZERS))
def test_3x_2y(variant):
    sx, xs, cost = instance_3x_2y()
    r = MINIMIZERS[variant](sx, cost, xs)
    assert r.status == bnb.OPTIMAL and r.value == D(6)
    assert (r.model[xs[0]], r.model[xs[1]]) == (D(0), D(3))


@pytest.mark.parametrize("variant", sorted(MINIMIZERS))
def test_single_branch_level(variant):
    sx, xs, cost = lp([((-1,), F(1, 2))], 1, objective=(1,))
    r = MINIMIZERS[variant](sx, cost, xs)
    assert r.status == bnb.OPTIMAL and r.value == D(1)


@pytest.mark.parametrize("variant", ["basic", "advanced"])
def test_empty_integer_slice(variant):
    # 1 <= 3x <= 2 has rational but no integer solutions
    sx, xs, cost = lp([((-3,), 1), ((3,), -2)], 1, objective=(1,))
    r = MINIMIZERS[variant](sx, cost, xs)
    assert r.status == bnb.INFEASIBLE


def test_advanced_counts_restarts_on_infeasible_slice():
    sx, xs, cost = lp([((-3,), 1), ((3,), -2)], 1, objective=(1,))
    assert bnb.minimize_advanced(sx, cost, xs).restarts >= 1


def test_x_plus_y_advanced():
    sx, xs, cost = lp([((-1, 0), 0), ((0, -1), 0), ((-1, -2), 3), ((-2, -1), 3)], 2,
                      objective=(1, 1))
    r = bnb.minimize_advanced(sx, cost, xs)
    assert r.value == D(2) and (r.model[xs[0]], r.model[xs[1]]) == (D(1), D(1))


def test_truncated_integral_lp_needs_no_branching():
    sx, xs, cost = lp([((-1,), 2)], 1, objective=(1,))
    r = bnb.minimize_truncated(sx, cost, xs, branch_limit=5)
    assert r.status == bnb.OPTIMAL or r.value == D(2)
    assert r.branches == 0


def test_truncated_limit_one_returns_first_solution():
    sx, xs, cost = instance_3x_2y()
    # incumbent x=3, y=0 of cost 9, as the engine would pass it
    model = sx.snapshot()
    model[xs[0]], model[xs[1]], model[cost] = D(3), D(0), D(9)
    r = bnb.minimize_truncated(sx, cost, xs, D(9), model, branch_limit=1)
    assert r.status in (bnb.SUBOPTIMAL, bnb.OPTIMAL)
    assert D(6) <= r.value <= D(9)
    assert r.value == D(3 * r.model[xs[0]].r + 2 * r.model[xs[1]].r)


def test_truncated_limit_one_converges_in_engine():
    from omtla import Options, SolverContext, optimize
    from omtla.formula import LinearTerm, Sort
    ctx = SolverContext(Options(bnb="truncated", branch_limit=1, mode="single"))
    x, y = (ctx.declare(n, Sort.INT).id for n in "xy")
    ctx.assert_formula(ctx.atom(LinearTerm({x: 1}), ">="))
    ctx.assert_formula(ctx.atom(LinearTerm({y: 1}), ">="))
    ctx.assert_formula(ctx.atom(LinearTerm({x: 1, y: 1}, F(-5, 2)), ">="))
    ctx.add_objective(LinearTerm({x: 3, y: 2}))
    assert optimize(ctx).objectives[0].value == D(6)


def test_truncated_zero_budget_keeps_initial_bound():
    sx, xs, cost = instance_3x_2y()
    initial = D(15)
    r = bnb.minimize_truncated(sx, cost, xs, ub=initial, model=sx.snapshot(), branch_limit=0)
    assert r.status == bnb.SUBOPTIMAL and r.value == initial


def test_check_unbounded():
    sx, xs, cost = lp([((1,), -5)], 1, objective=(1,))
    assert bnb.check_unbounded(sx, cost) == (True, None)
    sx, xs, cost = lp([((-1,), F(1, 2))], 1, objective=(1,))
    assert bnb.check_unbounded(sx, cost) == (False, D(F(1, 2)))


def test_feasibility_reports_reasons_without_cuts():
    sx = Simplex()
    x = sx.new_var(True)
    s = sx.slack_for(((x, F(3)),))
    sx.assert_lower(s, D(1), "lo")
    sx.assert_upper(s, D(2), "hi")
    assert sx.check() is None
    status, reasons, _ = bnb.feasible(sx, [x])
    assert status == "unsat" and sorted(reasons) == ["hi", "lo"]


def grid_min(rows, objective, box):
    best = None
    for pt in itertools.product(range(-box, box + 1), repeat=len(objective)):
        if all(sum(c * v for c, v in zip(coeffs, pt)) + k <= 0 for coeffs, k in rows):
            val = sum(c * v for c, v in zip(objective, pt))
            best = val if best is None else min(best, val)
    return best


coef = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.tuples(coef, coef), st.integers(-6, 6)), max_size=3),
       st.tuples(coef, coef))
def test_variants_agree_with_grid(extra, objective):
    box = 3
    rows = [((1, 0), -box), ((-1, 0), -box), ((0, 1), -box), ((0, -1), -box)]
    rows += [(c, F(k, 2)) for c, k in extra if c != (0, 0)]
    if objective == (0, 0):
        return
    expected = grid_min(rows, objective, box)
    for name, fn in MINIMIZERS.items():
        sx = Simplex()
        xs = [sx.new_var(True) for _ in range(2)]
        ok = True
        for coeffs, k in rows:
            s = sx.slack_for(tuple((xs[i], F(c)) for i, c in enumerate(coeffs) if c))
            ok = ok and sx.assert_upper(s, D(-k), None) is None
        if ok:
            ok = sx.check() is None
        if not ok:
            assert expected is None
            continue
        cost = sx.slack_for(tuple((xs[i], F(c)) for i, c in enumerate(objective) if c))
        sx.check()
        r = fn(sx, cost, xs)
        if expected is None:
            assert r.status == bnb.INFEASIBLE, name
        else:
            assert r.value == D(expected), name


def test_lattice_free_unbounded_set_gives_up():
    # 2x - 2y = 1 has no integer points; pure branching never refutes it
    sx = Simplex()
    x, y = sx.new_var(True), sx.new_var(True)
    s = sx.slack_for(((x, F(2)), (y, F(-2))))
    sx.assert_lower(s, D(1), "lo")
    sx.assert_upper(s, D(1), "hi")
    assert sx.check() is None
    assert bnb.feasible(sx, [x, y])[0] == "unknown"
    cost = sx.slack_for(((x, F(1)), (y, F(1))))
    sx.assert_lower(cost, D(0), None)
    sx.check()
    assert bnb.minimize_basic(sx, cost, [x, y]).status == bnb.UNKNOWN
    assert bnb.minimize_advanced(sx, cost, [x, y]).status == bnb.UNKNOWN


def test_engine_reports_unknown_on_lattice_free_set():
    from omtla import SolverContext, optimize
    from omtla.formula import LinearTerm, Sort
    ctx = SolverContext()
    x, y, z = (ctx.declare(n, Sort.INT).id for n in "xyz")
    # x even and x odd: each row alone has integer solutions
    ctx.assert_formula(ctx.atom(LinearTerm({x: 1, y: -2}), "="))
    ctx.assert_formula(ctx.atom(LinearTerm({x: 1, z: -2}, -1), "="))
    ctx.add_objective(LinearTerm({x: 1}))
    assert optimize(ctx).status == "unknown"
