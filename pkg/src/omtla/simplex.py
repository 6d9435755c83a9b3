"""Incremental bounded simplex over delta-rationals.

General-form tableau in the style of Dutertre & de Moura: every linear
term gets a slack variable defined by a row, atoms become bounds on single
variables, and ``check`` repairs bound violations by pivoting.  Bounds
carry an explanation object so conflicts can be reported as the set of
explanations of one row.
"""
from __future__ import annotations

from fractions import Fraction

from .arith import DeltaRational

_ZERO = DeltaRational()


class ContractViolation(RuntimeError):
    pass


class Simplex:
    def __init__(self):
        self.n = 0
        self.val: list = []
        self.lo: list = []
        self.hi: list = []
        self.lo_why: list = []
        self.hi_why: list = []
        self.is_int: list = []
        self.rows: dict = {}
        self.cols: list = []
        self.slack_of: dict = {}
        self.definition: dict = {}
        self._undo: list = []
        self.pivots = 0
        self.feasible = True

    # -- variables ------------------------------------------------------------

    def new_var(self, is_int: bool = False) -> int:
        v = self.n
        self.n += 1
        self.val.append(_ZERO)
        self.lo.append(None)
        self.hi.append(None)
        self.lo_why.append(None)
        self.hi_why.append(None)
        self.is_int.append(is_int)
        self.cols.append(set())
        return v

    def slack_for(self, coeffs, is_int: bool = False) -> int:
        """Variable standing for ``sum(c * x)``; shared between equal terms."""
        coeffs = tuple(coeffs)
        if len(coeffs) == 1 and coeffs[0][1] == 1:
            return coeffs[0][0]
        s = self.slack_of.get(coeffs)
        if s is not None:
            return s
        s = self.new_var(is_int)
        row: dict = {}
        for v, c in coeffs:
            r = self.rows.get(v)
            if r is None:
                row[v] = row.get(v, 0) + c
            else:
                for j, cj in r.items():
                    row[j] = row.get(j, 0) + c * cj
        row = {j: c for j, c in row.items() if c != 0}
        value = _ZERO
        for j, c in row.items():
            value = value + self.val[j] * c
            self.cols[j].add(s)
        self.val[s] = value
        self.rows[s] = row
        self.slack_of[coeffs] = s
        self.definition[s] = coeffs
        return s

    # -- bounds ---------------------------------------------------------------

    def mark(self) -> int:
        return len(self._undo)

    def backtrack(self, mark: int) -> None:
        if mark > len(self._undo):
            raise ContractViolation(f"unknown mark {mark}")
        undo = self._undo
        while len(undo) > mark:
            v, upper, bound, why = undo.pop()
            if upper:
                self.hi[v] = bound
                self.hi_why[v] = why
            else:
                self.lo[v] = bound
                self.lo_why[v] = why

    def relax(self, v: int) -> None:
        """Drop both bounds of ``v`` (undone by ``backtrack``)."""
        if self.hi[v] is not None:
            self._undo.append((v, True, self.hi[v], self.hi_why[v]))
            self.hi[v] = self.hi_why[v] = None
        if self.lo[v] is not None:
            self._undo.append((v, False, self.lo[v], self.lo_why[v]))
            self.lo[v] = self.lo_why[v] = None

    def assert_upper(self, v: int, bound: DeltaRational, why):
        """Tighten ``v <= bound``; returns a conflict list or None."""
        if self.is_int[v] and not bound.is_integral():
            bound = DeltaRational(bound.floor())
        hi = self.hi[v]
        if hi is not None and bound >= hi:
            return None
        lo = self.lo[v]
        if lo is not None and bound < lo:
            return [why, self.lo_why[v]]
        self._undo.append((v, True, hi, self.hi_why[v]))
        self.hi[v] = bound
        self.hi_why[v] = why
        self.feasible = False
        if v not in self.rows and self.val[v] > bound:
            self._update(v, bound)
        return None

    def assert_lower(self, v: int, bound: DeltaRational, why):
        """Tighten ``v >= bound``; returns a conflict list or None."""
        if self.is_int[v] and not bound.is_integral():
            bound = DeltaRational(bound.ceil())
        lo = self.lo[v]
        if lo is not None and bound <= lo:
            return None
        hi = self.hi[v]
        if hi is not None and bound > hi:
            return [why, self.hi_why[v]]
        self._undo.append((v, False, lo, self.lo_why[v]))
        self.lo[v] = bound
        self.lo_why[v] = why
        self.feasible = False
        if v not in self.rows and self.val[v] < bound:
            self._update(v, bound)
        return None

    # -- pivoting -------------------------------------------------------------

    def _update(self, x: int, new: DeltaRational) -> None:
        theta = new - self.val[x]
        val, rows = self.val, self.rows
        for k in self.cols[x]:
            val[k] = val[k] + theta * rows[k][x]
        val[x] = new

    def _pivot(self, b: int, x: int) -> None:
        rows, cols = self.rows, self.cols
        row_b = rows.pop(b)
        a = row_b.pop(x)
        inv = 1 / a
        new_row = {b: inv}
        for j, c in row_b.items():
            new_row[j] = -c * inv
            cols[j].discard(b)
        cols[x].discard(b)
        for k in list(cols[x]):
            rk = rows[k]
            c = rk.pop(x)
            for j, cj in new_row.items():
                nv = rk.get(j, 0) + c * cj
                if nv == 0:
                    if j in rk:
                        del rk[j]
                        cols[j].discard(k)
                else:
                    if j not in rk:
                        cols[j].add(k)
                    rk[j] = nv
        cols[x] = set()
        rows[x] = new_row
        for j in new_row:
            cols[j].add(x)
        self.pivots += 1

    def _pivot_and_update(self, b: int, x: int, v: DeltaRational) -> None:
        val, rows = self.val, self.rows
        a = rows[b][x]
        theta = (v - val[b]) / a
        val[b] = v
        val[x] = val[x] + theta
        for k in self.cols[x]:
            if k != b:
                val[k] = val[k] + theta * rows[k][x]
        self._pivot(b, x)

    # -- consistency ----------------------------------------------------------

    def check(self):
        """Repair the assignment; returns a row-local conflict list or None."""
        val, lo, hi, rows, cols = self.val, self.lo, self.hi, self.rows, self.cols
        threshold = 3 * max(self.n, 1)
        steps = 0
        while True:
            b = None
            below = False
            for k, _ in rows.items():
                vk = val[k]
                l = lo[k]
                if l is not None and vk < l:
                    if b is None or k < b:
                        b, below = k, True
                    continue
                h = hi[k]
                if h is not None and vk > h:
                    if b is None or k < b:
                        b, below = k, False
            if b is None:
                self.feasible = True
                return None
            row = rows[b]
            bland = steps >= threshold
            best = None
            best_key = None
            for j, c in row.items():
                if below:
                    ok = (c > 0 and (hi[j] is None or val[j] < hi[j])) or \
                         (c < 0 and (lo[j] is None or val[j] > lo[j]))
                else:
                    ok = (c > 0 and (lo[j] is None or val[j] > lo[j])) or \
                         (c < 0 and (hi[j] is None or val[j] < hi[j]))
                if ok:
                    key = j if bland else (len(cols[j]), j)
                    if best is None or key < best_key:
                        best, best_key = j, key
            if best is None:
                self.feasible = False
                if below:
                    why = [self.lo_why[b]]
                    for j, c in row.items():
                        why.append(self.hi_why[j] if c > 0 else self.lo_why[j])
                else:
                    why = [self.hi_why[b]]
                    for j, c in row.items():
                        why.append(self.lo_why[j] if c > 0 else self.hi_why[j])
                return list(dict.fromkeys(why))
            self._pivot_and_update(b, best, lo[b] if below else hi[b])
            steps += 1

    def minimize(self, z: int):
        """Drive ``z`` to its minimum over the current bounds.

        Requires a feasible assignment (a preceding successful ``check``).
        Returns the minimum as a DeltaRational, or None when unbounded below.
        """
        if not self.feasible:
            raise ContractViolation("minimize called without a feasible check")
        val, lo, hi, rows, cols = self.val, self.lo, self.hi, self.rows, self.cols
        while True:
            row = rows.get(z)
            if row is None:
                row = {z: Fraction(1)}
            entering = None
            for j in sorted(row):
                c = row[j]
                if c > 0 and (lo[j] is None or val[j] > lo[j]):
                    entering, direction = j, -1
                    break
                if c < 0 and (hi[j] is None or val[j] < hi[j]):
                    entering, direction = j, 1
                    break
            if entering is None:
                return val[z]
            x = entering
            limit = None
            leaving = None
            if direction < 0 and lo[x] is not None:
                limit, leaving = val[x] - lo[x], x
            elif direction > 0 and hi[x] is not None:
                limit, leaving = hi[x] - val[x], x
            for k in sorted(cols[x]):
                c = rows[k][x] * direction
                if c > 0:
                    h = hi[k]
                    if h is None:
                        continue
                    room = (h - val[k]) / c
                else:
                    l = lo[k]
                    if l is None:
                        continue
                    room = (val[k] - l) / (-c)
                if limit is None or room < limit:
                    limit, leaving = room, k
            if limit is None:
                return None
            if leaving == x:
                self._update(x, lo[x] if direction < 0 else hi[x])
            else:
                c = rows[leaving][x] * direction
                target = hi[leaving] if c > 0 else lo[leaving]
                self._pivot_and_update(leaving, x, target)

    # -- models ---------------------------------------------------------------

    def epsilon(self) -> Fraction:
        """A concrete positive value for the infinitesimal respecting all bounds."""
        eps = Fraction(1)
        for v in range(self.n):
            x = self.val[v]
            l = self.lo[v]
            if l is not None and l.r < x.r and l.d > x.d:
                eps = min(eps, (x.r - l.r) / (l.d - x.d))
            h = self.hi[v]
            if h is not None and x.r < h.r and x.d > h.d:
                eps = min(eps, (h.r - x.r) / (x.d - h.d))
        return eps

    def snapshot(self) -> list:
        return list(self.val)

    def violated(self) -> list:
        """Variables whose current value breaks a bound (debug helper)."""
        out = []
        for v in range(self.n):
            if (self.lo[v] is not None and self.val[v] < self.lo[v]) or \
               (self.hi[v] is not None and self.val[v] > self.hi[v]):
                out.append(v)
        return out
