import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omtla import NEG_INF, DeltaRational as D, engine
from omtla.formula import LinearTerm, Sort
from omtla.harness import fuzz
from omtla.harness.bench import flatten
from omtla.harness.oracle import OracleRefused, lex_oracle, oracle_optimum
from omtla.harness.verify import verify_minimum, verify_outcome
from omtla.runner import solve_problem
from omtla.sat import STOP
from omtla.script import AndE, Cmp, OrE

TOY = """
(declare-fun x () Real)
(declare-fun y () Real)
(assert (and (<= 1 y) (<= y 3) (or (and (<= 1 x) (<= x 3)) (>= x 4))))
(minimize (- y) :id cost1)
(minimize (- (- x) y) :id cost2)
(check-sat)
"""


def L(coeffs, k=0):
    return LinearTerm(coeffs, k)


def objective(problem, name):
    return next(m for m in problem.objectives if m.name == name)


# -- oracle ---------------------------------------------------------------------

def test_oracle_toy():
    p = flatten(TOY)
    r1 = oracle_optimum(p.decls, p.assertions, objective(p, "cost1").term)
    r2 = oracle_optimum(p.decls, p.assertions, objective(p, "cost2").term)
    assert (r1.status, r1.value, r1.attained) == ("optimal", -3, True)
    assert (r2.status, r2.value) == ("unbounded", NEG_INF)


def test_oracle_integer_grid():
    decls = {"x": Sort.INT, "y": Sort.INT}
    phi = [Cmp(L({"x": 1}), ">="), Cmp(L({"y": 1}), ">="),
           Cmp(L({"x": 1, "y": 1}, F(-5, 2)), ">=")]
    r = oracle_optimum(decls, phi, L({"x": 3, "y": 2}))
    assert (r.value, r.attained) == (6, True)


def test_oracle_open_infimum():
    r = oracle_optimum({"x": Sort.REAL}, [Cmp(L({"x": 1}), ">")], L({"x": 1}))
    assert (r.value, r.attained) == (0, False)


def test_oracle_unsat_and_maximize():
    decls = {"x": Sort.REAL}
    r = oracle_optimum(decls, [Cmp(L({"x": 1}), "<"), Cmp(L({"x": 1}), ">")], L({"x": 1}))
    assert r.status == "unsat"
    r = oracle_optimum(decls, [Cmp(L({"x": 1}, -3), "<=")], L({"x": 1}), maximize=True)
    assert (r.value, r.attained) == (3, True)


def test_oracle_refuses_large_instances():
    decls = {f"v{i}": Sort.REAL for i in range(5)}
    with pytest.raises(OracleRefused):
        oracle_optimum(decls, [], L({"v0": 1}))


def test_lex_oracle_marks_later_stages_unresolved():
    decls = {"x": Sort.REAL, "y": Sort.REAL}
    phi = [Cmp(L({"y": 1}), ">=")]
    out = lex_oracle(decls, phi, [(L({"x": 1}), False), (L({"y": 1}), False)])
    assert out[0].status == "unbounded" and out[1] is None


box_atoms = st.tuples(st.sampled_from("xy"), st.sampled_from(["<=", ">=", "="]),
                      st.integers(-4, 4))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(box_atoms, min_size=1, max_size=3), min_size=1, max_size=3),
       st.integers(-3, 3), st.integers(-3, 3))
def test_oracle_paths_agree_on_integral_polyhedra(disjuncts, a, b):
    # unions of boxes with integer corners: the rational optimum is integral,
    # so the grid path and the Fourier-Motzkin path must coincide
    phi = [Cmp(L({v: 1}, -4), "<=") for v in "xy"] + [Cmp(L({v: 1}, 4), ">=") for v in "xy"]
    phi.append(OrE(tuple(AndE(tuple(Cmp(L({v: 1}, -k), rel) for v, rel, k in conj))
                         for conj in disjuncts)))
    term = L({"x": a, "y": b})
    # up to 4 box atoms plus 9 disjunct atoms
    as_int = oracle_optimum({"x": Sort.INT, "y": Sort.INT}, phi, term, max_atoms=13)
    as_real = oracle_optimum({"x": Sort.REAL, "y": Sort.REAL}, phi, term, max_atoms=13)
    assert (as_int.status, as_int.value, as_int.attained) == \
        (as_real.status, as_real.value, as_real.attained)


# -- verification ---------------------------------------------------------------

def test_verify_toy():
    p = flatten(TOY)
    rep = verify_minimum(p, objective(p, "cost1").term, F(-3), True, name="cost1")
    assert rep.verdict == "pass" and rep.lower_check and rep.equality_check


def test_verify_point():
    p = flatten("(declare-fun x () Real) (assert (and (>= x 2) (<= x 2))) (minimize x)")
    assert verify_minimum(p, L({"x": 1}), F(2), True).verdict == "pass"
    bad = verify_minimum(p, L({"x": 1}), F(19, 10), True)
    assert bad.verdict == "fail" and bad.lower_check and bad.equality_check is False


def test_verify_too_high_value_yields_counter_model():
    p = flatten("(declare-fun x () Real) (assert (>= x 2)) (minimize x)")
    rep = verify_minimum(p, L({"x": 1}), F(3), True)
    assert rep.verdict == "fail" and rep.counter_model["x"] < 3


def test_verify_open_infimum_and_unbounded():
    p = flatten("(declare-fun x () Real) (assert (> x 0)) (minimize x)")
    assert verify_minimum(p, L({"x": 1}), F(0), False).verdict == "pass"
    assert verify_minimum(p, L({"x": 1}), F(0), True).verdict == "fail"
    q = flatten("(declare-fun x () Real) (assert (< x 0)) (minimize x)")
    assert verify_minimum(q, L({"x": 1}), NEG_INF, False).verdict == "pass"


def test_verify_outcome_on_solver_output():
    p = flatten(TOY)
    out, _ = solve_problem(p)
    reports = verify_outcome(p, out)
    assert [r.verdict for r in reports] == ["pass", "pass"]


# -- fuzzing --------------------------------------------------------------------

def test_empty_fuzz_round():
    s = fuzz.fuzz_round(fuzz.FuzzConfig(seed=1), 0)
    assert (s.total, s.passed, s.failed, s.runs) == (0, 0, [], 0)


def test_generated_instances_stay_small():
    cfg = fuzz.FuzzConfig(seed=5)
    for inst in fuzz.generate_corpus(cfg, 60, (1, 3)):
        p = inst.problem
        assert len(p.arith_vars) <= cfg.max_arith_vars
        assert fuzz._atom_count(p.constraints()) <= cfg.max_atoms
        assert inst.kind in ("Q", "Z", "mixed")


def test_generation_is_seeded():
    a = fuzz.generate_corpus(fuzz.FuzzConfig(seed=9), 10)
    b = fuzz.generate_corpus(fuzz.FuzzConfig(seed=9), 10)
    assert [i.problem for i in a] == [i.problem for i in b]


def test_fuzz_round_passes():
    s = fuzz.fuzz_round(fuzz.FuzzConfig(seed=42), 40)
    assert s.ok and s.passed == 40 and s.runs == 40 * 12


@pytest.fixture
def stop_after_first_model(monkeypatch):
    # fault: give up after the first minimization, skipping later linear steps
    original = engine._Run.on_model

    def faulty(self):
        original(self)
        return STOP

    monkeypatch.setattr(engine._Run, "on_model", faulty)


def test_fuzz_detects_injected_fault(stop_after_first_model, tmp_path):
    s = fuzz.fuzz_round(fuzz.FuzzConfig(seed=42), 30, keep_failing=str(tmp_path))
    assert not s.ok
    dumped = sorted(tmp_path.glob("*.smt2"))
    assert len(dumped) == len(s.failed)
    text = dumped[0].read_text()
    assert text.startswith("; ") and "(check-sat)" in text
    flatten(text)      # the dump replays as a script


def test_same_value_rules():
    r = engine.ObjectiveResult("c", D(2), True, None)
    e = fuzz.oracle_optimum({"x": Sort.REAL}, [Cmp(L({"x": 1}, -2), "=")], L({"x": 1}))
    assert fuzz.same_value(r, e)
    assert not fuzz.same_value(engine.ObjectiveResult("c", D(2, 1), False, None), e)


def test_random_instances_verify():
    rng = random.Random(3)
    cfg = fuzz.FuzzConfig(seed=3)
    for i in range(15):
        inst = fuzz.generate(rng, cfg, f"v{i}", 2)
        out, _ = solve_problem(inst.problem)
        assert all(r.verdict == "pass" for r in verify_outcome(inst.problem, out))


def test_oracle_integer_ray_check():
    decls = {"x": Sort.INT, "y": Sort.INT}
    # y is boxed, x only bounded above: the grid optimum sits on the sentinel face
    phi = [Cmp(L({"x": 1}, -3), "<="), Cmp(L({"y": 1}), ">="), Cmp(L({"y": 1}, -2), "<=")]
    assert oracle_optimum(decls, phi, L({"x": 1, "y": 1})).value == NEG_INF
    # direction blocked by 2y >= x: bounded, but the optimum is outside the box
    phi = [Cmp(L({"x": 1, "y": -2}), "<="), Cmp(L({"y": 1}, -200), "<=")]
    with pytest.raises(OracleRefused):
        oracle_optimum(decls, phi, L({"x": -1}))
