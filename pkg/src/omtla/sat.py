"""CDCL SAT engine with theory hooks, assumptions and push/pop frames.

Literals are non-zero ints (``v`` / ``-v``).  A theory, when attached,
receives every trail literal of a registered theory variable and is asked
for consistency after each propagation fixpoint (early pruning) and on
complete assignments.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .formula import Origin


class InterfaceError(RuntimeError):
    pass


SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"


@dataclass
class SatResult:
    status: str
    model: list = field(default_factory=list)
    core: list = field(default_factory=list)


class Clause:
    __slots__ = ("lits", "origin", "learnt", "deleted", "guard", "attached")

    def __init__(self, lits, origin=Origin.INPUT, learnt=False, guard=None):
        self.lits = lits
        self.origin = origin
        self.learnt = learnt
        self.deleted = False
        self.guard = guard
        self.attached = False

    def __repr__(self):
        return f"Clause({self.lits}, {self.origin.value})"


def luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


@dataclass
class SatStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    restarts: int = 0
    theory_conflicts: int = 0
    gc_runs: int = 0


STOP = object()


class SatSolver:
    """Conflict-driven clause learning over integer literals."""

    def __init__(self, seed: int = 0, restart_base: int = 100, gc_ratio: float = 0.5):
        self.rng = random.Random(seed)
        self.nvars = 0
        self.value = [0]
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.phase = [False]
        self.is_theory = [False]
        self.decision = [False]
        self.watches = [[], []]
        self.trail: list = []
        self.trail_lim: list = []
        self.qhead = 0
        self.theory_head = 0
        self.clauses: list = []
        self.learnts: list = []
        self.unsat = False
        self.theory = None
        self.heap: list = []
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.restart_base = restart_base
        self.gc_ratio = gc_ratio
        self.frames: list = []
        self.retired: set = set()
        self.stats = SatStats()
        self.last_clause = None

    # -- variables ------------------------------------------------------------

    def new_var(self, theory: bool = False) -> int:
        self.nvars += 1
        v = self.nvars
        self.value.append(0)
        self.level.append(0)
        self.reason.append(None)
        # seeded jitter keeps equal-activity ties deterministic per seed
        self.activity.append(self.rng.random() * 1e-6)
        self.phase.append(False)
        self.is_theory.append(theory)
        self.decision.append(True)
        self.watches.append([])
        self.watches.append([])
        heapq.heappush(self.heap, (-self.activity[v], v))
        return v

    def set_theory_var(self, v: int) -> None:
        self.is_theory[v] = True

    def set_decision(self, v: int, flag: bool) -> None:
        """Exclude ``v`` from branching; it can still be propagated.

        Only sound for variables whose unassigned clauses are implied by the
        rest of the clause set and the theory (e.g. cost-bound atoms).
        """
        if flag and not self.decision[v] and self.value[v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))
        self.decision[v] = flag

    def lit_value(self, lit: int) -> int:
        val = self.value[lit if lit > 0 else -lit]
        return val if lit > 0 else -val

    def var_level(self, v: int) -> int:
        return self.level[abs(v)]

    def decision_level(self) -> int:
        return len(self.trail_lim)

    @staticmethod
    def _widx(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    # -- trail ----------------------------------------------------------------

    def _enqueue(self, lit: int, reason) -> None:
        v = lit if lit > 0 else -lit
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        value, phase, reason, act, heap = self.value, self.phase, self.reason, self.activity, self.heap
        for lit in reversed(self.trail[start:]):
            v = lit if lit > 0 else -lit
            value[v] = 0
            reason[v] = None
            phase[v] = lit > 0
            heapq.heappush(heap, (-act[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        if self.theory_head > start:
            self.theory_head = start
        if self.theory is not None:
            self.theory.backtrack(start)

    # -- clauses --------------------------------------------------------------

    def _attach(self, c: Clause) -> None:
        c.attached = True
        self.watches[self._widx(c.lits[0])].append(c)
        self.watches[self._widx(c.lits[1])].append(c)

    def add_clause(self, lits, origin: Origin = Origin.INPUT) -> bool:
        """Add a clause; inside a frame it is guarded by the frame variable.

        Returns False once the clause set is unsatisfiable at level 0.
        """
        lits = list(lits)
        guard = None
        if self.frames and origin is Origin.INPUT:
            guard = self.frames[-1]
            lits.append(-guard)
        return self._add(lits, origin, learnt=False, guard=guard)

    def add_learned(self, lits, origin: Origin, guard=None) -> bool:
        return self._add(list(lits), origin, learnt=True, guard=guard)

    def _add(self, lits, origin, learnt, guard) -> bool:
        self.last_clause = None
        if self.unsat:
            return False
        seen = set()
        out = []
        for l in lits:
            if -l in seen:
                return True
            if l not in seen:
                seen.add(l)
                out.append(l)
        # drop literals false at level 0, skip clauses true at level 0
        lits = []
        for l in out:
            val = self.lit_value(l)
            if val != 0 and self.level[abs(l)] == 0:
                if val > 0:
                    return True
                continue
            lits.append(l)
        if not lits:
            self.cancel_until(0)
            self.unsat = True
            return False
        if len(lits) == 1:
            self.cancel_until(0)
            val = self.lit_value(lits[0])
            if val < 0:
                self.unsat = True
                return False
            if val == 0:
                self._enqueue(lits[0], None)
            return True
        value, level = self.value, self.level

        def key(l):
            val = value[abs(l)] * (1 if l > 0 else -1)
            if val == 0:
                return (0, 0)
            if val > 0:
                return (1, level[abs(l)])
            return (2, -level[abs(l)])

        lits.sort(key=key)
        c = Clause(lits, origin, learnt, guard)
        self._attach(c)
        (self.learnts if learnt else self.clauses).append(c)
        self.last_clause = c
        v0 = self.lit_value(lits[0])
        v1 = self.lit_value(lits[1])
        if v0 == 0 and v1 < 0:
            self.cancel_until(self.level[abs(lits[1])])
            self._enqueue(lits[0], c)
        elif v0 < 0:
            return self._resolve_conflict(c)
        return True

    # -- propagation ----------------------------------------------------------

    def _propagate(self):
        value, watches, trail = self.value, self.watches, self.trail
        widx = self._widx
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.stats.propagations += 1
            false_lit = -p
            ws = watches[widx(false_lit)]
            keep = []
            i = 0
            n = len(ws)
            conflict = None
            while i < n:
                c = ws[i]
                i += 1
                if c.deleted:
                    continue
                lits = c.lits
                if lits[0] == false_lit:
                    lits[0], lits[1] = lits[1], lits[0]
                first = lits[0]
                fv = value[first] if first > 0 else -value[-first]
                if fv > 0:
                    keep.append(c)
                    continue
                found = False
                for k in range(2, len(lits)):
                    q = lits[k]
                    qv = value[q] if q > 0 else -value[-q]
                    if qv >= 0:
                        lits[1], lits[k] = q, false_lit
                        watches[widx(q)].append(c)
                        found = True
                        break
                if found:
                    continue
                keep.append(c)
                if fv < 0:
                    conflict = c
                    keep.extend(ws[i:])
                    break
                self._enqueue(first, c)
            watches[widx(false_lit)] = keep
            if conflict is not None:
                self.qhead = len(trail)
                return conflict
        return None

    def _theory_lemma(self, reasons) -> Clause:
        self.stats.theory_conflicts += 1
        lits = list(dict.fromkeys(-r for r in reasons))
        return Clause(lits, Origin.TLEMMA, learnt=True)

    def _propagate_all(self):
        while True:
            confl = self._propagate()
            if confl is not None:
                return confl
            th = self.theory
            if th is None:
                return None
            trail = self.trail
            while self.theory_head < len(trail):
                lit = trail[self.theory_head]
                self.theory_head += 1
                if self.is_theory[abs(lit)]:
                    reasons = th.assert_lit(lit, self.theory_head - 1)
                    if reasons is not None:
                        return self._theory_lemma(reasons)
            reasons = th.check()
            if reasons is not None:
                return self._theory_lemma(reasons)
            progressed = False
            for lit, why in th.implied():
                val = self.lit_value(lit)
                if val > 0:
                    continue
                c = Clause([lit, -why], Origin.TLEMMA, learnt=True)
                if val < 0:
                    return c
                self._attach(c)
                self.learnts.append(c)
                self._enqueue(lit, c)
                progressed = True
            if not progressed:
                return None

    # -- conflict analysis ----------------------------------------------------

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for i in range(1, self.nvars + 1):
                act[i] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[i], i) for i in range(1, self.nvars + 1) if self.value[i] == 0]
            heapq.heapify(self.heap)
        elif self.value[v] == 0:
            heapq.heappush(self.heap, (-act[v], v))

    def analyze(self, confl: Clause):
        """First-UIP learning.  Returns ``(learnt_lits, backjump_level)``."""
        level, reason, trail = self.level, self.reason, self.trail
        cur = len(self.trail_lim)
        seen = set()
        learnt = [0]
        path = 0
        p = None
        idx = len(trail) - 1
        lits = confl.lits
        while True:
            for q in (lits if p is None else lits[1:]):
                v = q if q > 0 else -q
                if v not in seen and level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while True:
                lit = trail[idx]
                idx -= 1
                if abs(lit) in seen:
                    break
            p = lit
            v = abs(p)
            seen.discard(v)
            path -= 1
            if path <= 0:
                break
            r = reason[v]
            lits = r.lits
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for i in range(2, len(learnt)):
            if level[abs(learnt[i])] > level[abs(learnt[best])]:
                best = i
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _resolve_conflict(self, confl: Clause) -> bool:
        """Backjump and learn from a falsified clause; False if unsat at level 0."""
        self.stats.conflicts += 1
        lvl = max(self.level[abs(l)] for l in confl.lits)
        if lvl == 0:
            self.cancel_until(0)
            self.unsat = True
            return False
        if (confl.origin is Origin.TLEMMA and not confl.attached
                and len(confl.lits) > 1):
            confl.lits.sort(key=lambda l: -self.level[abs(l)])
            self._attach(confl)
            self.learnts.append(confl)
        self.cancel_until(lvl)
        learnt, bt = self.analyze(confl)
        self.cancel_until(bt)
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
        else:
            c = Clause(learnt, Origin.LEARNED, learnt=True)
            self._attach(c)
            self.learnts.append(c)
            self._enqueue(learnt[0], c)
        self.var_inc /= self.var_decay
        return True

    def analyze_final(self, lit: int) -> list:
        """Assumption literals responsible for ``lit`` being true."""
        core = [-lit]
        if not self.trail_lim:
            return core
        seen = {abs(lit)}
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            q = self.trail[i]
            v = abs(q)
            if v not in seen:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0 and q != -lit:
                    core.append(q)
            else:
                for x in r.lits[1:]:
                    if self.level[abs(x)] > 0:
                        seen.add(abs(x))
            seen.discard(v)
        return core

    # -- decisions ------------------------------------------------------------

    def _pick_branch(self):
        heap, value, decision = self.heap, self.value, self.decision
        while heap:
            _, v = heapq.heappop(heap)
            if value[v] == 0 and decision[v]:
                self.stats.decisions += 1
                return v if self.phase[v] else -v
        return None

    # -- frames ---------------------------------------------------------------

    def push(self) -> int:
        a = self.new_var()
        self.frames.append(a)
        return a

    def pop(self) -> int:
        if not self.frames:
            raise InterfaceError("pop without matching push")
        a = self.frames.pop()
        self.retire(a)
        return a

    def retire(self, a: int) -> None:
        """Permanently disable clauses guarded by assumption variable ``a``."""
        self.retired.add(a)
        self.cancel_until(0)
        self._add([-a], Origin.INPUT, learnt=False, guard=None)

    def collect_garbage(self) -> int:
        """Drop inactive augmented clauses once they dominate the learned set."""
        dead = [c for c in self.learnts
                if c.origin is Origin.AUGMENTED and c.guard in self.retired]
        if not self.learnts or len(dead) <= self.gc_ratio * len(self.learnts):
            return 0
        self.cancel_until(0)
        for c in dead:
            c.deleted = True
        self.learnts = [c for c in self.learnts if not c.deleted]
        self.stats.gc_runs += 1
        return len(dead)

    # -- main loop ------------------------------------------------------------

    def model(self) -> list:
        return [v > 0 for v in self.value]

    def solve(self, assumptions=(), on_model=None, decide_hook=None) -> SatResult:
        """Search under ``assumptions``.

        ``on_model()`` is invoked on each theory-consistent total assignment;
        it returns ``STOP`` to accept, or a list of ``(lits, origin, guard)``
        clauses to learn before the search continues.  ``decide_hook(solver)``
        may return a literal to decide right above the assumption levels.
        """
        if self.unsat:
            return SatResult(UNSAT)
        self.cancel_until(0)
        self.collect_garbage()
        assumptions = list(assumptions)
        root = len(assumptions)
        restart_idx = 0
        budget = luby(2, restart_idx) * self.restart_base
        conflicts_here = 0
        while True:
            confl = self._propagate_all()
            if confl is not None:
                if not self._resolve_conflict(confl):
                    return SatResult(UNSAT)
                conflicts_here += 1
                if conflicts_here >= budget:
                    self.stats.restarts += 1
                    restart_idx += 1
                    budget = luby(2, restart_idx) * self.restart_base
                    conflicts_here = 0
                    self.cancel_until(0)
                continue
            lvl = len(self.trail_lim)
            if lvl < root:
                a = assumptions[lvl]
                val = self.lit_value(a)
                if val < 0:
                    core = self.analyze_final(-a)
                    self.cancel_until(0)
                    return SatResult(UNSAT, core=core)
                self._new_level()
                if val == 0:
                    self._enqueue(a, None)
                continue
            lit = None
            if decide_hook is not None and lvl == root:
                lit = decide_hook(self)
            if lit is None:
                lit = self._pick_branch()
            if lit is None:
                if self.theory is not None:
                    reasons = self.theory.final_check()
                    if reasons == UNKNOWN:
                        self.cancel_until(0)
                        return SatResult(UNKNOWN)
                    if reasons is not None:
                        if not self._resolve_conflict(self._theory_lemma(reasons)):
                            return SatResult(UNSAT)
                        continue
                if on_model is None:
                    return SatResult(SAT, model=self.model())
                out = on_model()
                if out is STOP:
                    return SatResult(SAT, model=self.model())
                for lits, origin, guard in out:
                    if not self._add(list(lits), origin, learnt=True, guard=guard):
                        return SatResult(UNSAT)
                continue
            self._new_level()
            self._enqueue(lit, None)
