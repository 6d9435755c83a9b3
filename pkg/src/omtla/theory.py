"""Linear arithmetic theory solver plugged into the CDCL engine."""
from __future__ import annotations

from collections import defaultdict

from . import bnb
from .arith import DeltaRational
from .formula import EQ, LE, LT
from .sat import UNKNOWN
from .simplex import Simplex


class LATheory:
    """Maps atom literals to simplex bounds; integer completeness via B&B."""

    def __init__(self, sat, feasibility_limit: int = 5000):
        self.sat = sat
        self.sx = Simplex()
        self.atoms: dict = {}
        self.on_var = defaultdict(list)
        self.int_vars: list = []
        self._records: list = []
        self._touched: list = []
        self.feasibility_limit = feasibility_limit
        self.bnb_nodes = 0
        sat.theory = self

    # -- registration -----------------------------------------------------------

    def new_var(self, is_int: bool) -> int:
        v = self.sx.new_var(is_int)
        if is_int:
            self.int_vars.append(v)
        return v

    def register(self, prop: int, atom, sx_coeffs, is_int_term: bool) -> None:
        """Attach a normalized atom (coefficients already over simplex vars)."""
        s = self.sx.slack_for(sx_coeffs, is_int_term)
        self.atoms[prop] = (s, atom.relation, -atom.constant)
        self.on_var[s].append(prop)
        self.sat.set_theory_var(prop)

    def bound_var(self, prop: int) -> int:
        return self.atoms[prop][0]

    # -- CDCL hooks -----------------------------------------------------------

    def assert_lit(self, lit: int, pos: int):
        s = self.atoms[lit if lit > 0 else -lit][0]
        self._records.append((pos, self.sx.mark()))
        self._touched.append(s)
        return self._bound(lit)

    def _bound(self, lit: int):
        sx = self.sx
        s, rel, k = self.atoms[lit if lit > 0 else -lit]
        if rel == LE:
            if lit > 0:
                return sx.assert_upper(s, DeltaRational(k), lit)
            return sx.assert_lower(s, DeltaRational(k, 1), lit)
        if rel == LT:
            if lit > 0:
                return sx.assert_upper(s, DeltaRational(k, -1), lit)
            return sx.assert_lower(s, DeltaRational(k), lit)
        if lit > 0:
            b = DeltaRational(k)
            return sx.assert_upper(s, b, lit) or sx.assert_lower(s, b, lit)
        return None

    def check(self):
        return self.sx.check()

    def rebuild_bounds(self, s: int, skip) -> None:
        """Re-derive the bounds of ``s`` ignoring the atoms in ``skip``.

        Only meaningful between ``sx.mark()`` and ``sx.backtrack()``; the
        result is a relaxation of the current bounds.
        """
        self.sx.relax(s)
        for p in self.on_var.get(s, ()):
            val = self.sat.lit_value(p)
            if val != 0 and p not in skip:
                self._bound(p if val > 0 else -p)

    def implied(self):
        """Bound implications between atoms over the same variable."""
        if not self._touched:
            return ()
        out = []
        sx, sat = self.sx, self.sat
        for s in dict.fromkeys(self._touched):
            lo, hi = sx.lo[s], sx.hi[s]
            for q in self.on_var[s]:
                if sat.lit_value(q) != 0:
                    continue
                _, rel, k = self.atoms[q]
                K = DeltaRational(k)
                if hi is not None:
                    if (rel == LE and hi <= K) or (rel == LT and hi < K):
                        out.append((q, sx.hi_why[s]))
                        continue
                    if rel == EQ and hi < K:
                        out.append((-q, sx.hi_why[s]))
                        continue
                if lo is not None:
                    if (rel == LE and lo > K) or (rel == LT and lo >= K) or (rel == EQ and lo > K):
                        out.append((-q, sx.lo_why[s]))
        self._touched.clear()
        return out

    def final_check(self):
        conf = self.sx.check()
        if conf is not None:
            return conf
        if not self.int_vars:
            return None
        r = bnb.feasible(self.sx, self.int_vars, self.feasibility_limit)
        self.bnb_nodes += r[-1]
        if r[0] == "sat":
            return None
        if r[0] == "unsat":
            return r[1]
        return UNKNOWN

    def backtrack(self, trail_len: int) -> None:
        recs = self._records
        if not recs or recs[-1][0] < trail_len:
            return
        mark = None
        while recs and recs[-1][0] >= trail_len:
            mark = recs.pop()[1]
        self.sx.backtrack(mark)
        self._touched.clear()

    # -- models ---------------------------------------------------------------

    def concrete_values(self, snapshot=None) -> list:
        """Rational values for every simplex variable (epsilon instantiated)."""
        sx = self.sx
        if snapshot is not None:
            saved = sx.val
            sx.val = list(snapshot)
            try:
                eps = sx.epsilon()
                return [v.concrete(eps) for v in sx.val]
            finally:
                sx.val = saved
        eps = sx.epsilon()
        return [v.concrete(eps) for v in sx.val]
