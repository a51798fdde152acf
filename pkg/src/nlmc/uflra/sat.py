"""Small CDCL SAT core with theory hooks and assumption literals.

Literals are nonzero ints (+v / -v for 1-based variable v).  The theory
listener is notified of assignments to theory literals and may veto with
a conflict: a list of literals that are all currently true but jointly
theory-inconsistent.  Assumptions are decided first (one per level); an
unsat answer leaves the subset of assumptions used by the refutation in
`self.core`.  Everything is deterministic: activity with index
tie-break, fixed phase, no randomization.
"""

from __future__ import annotations

import heapq
from typing import Callable, Optional


class TheoryListener:
    def on_assert(self, lit: int) -> Optional[list[int]]:
        """lit became true; return jointly-inconsistent true literals or None."""
        return None

    def mark(self):
        return None

    def backtrack(self, mark) -> None:
        pass

    def check(self, full: bool) -> Optional[list[int]]:
        """Called at propagation fixpoints (full=True on a full assignment)."""
        return None


class Solver:
    def __init__(self, theory: TheoryListener | None = None):
        self.theory = theory or TheoryListener()
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[list[int]]] = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, Optional[list[int]]] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.theory_marks: list = []
        self.qhead = 0
        self.activity: dict[int, float] = {}
        self.var_inc = 1.0
        # max-activity heap with lazy entries: (-activity, var)
        self.order: list[tuple[float, int]] = []
        self.is_theory_lit: Callable[[int], bool] = lambda lit: False
        self.core: list[int] = []
        self.ok = True
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0}

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.activity[v] = 0.0
        heapq.heappush(self.order, (0.0, v))
        return v

    def value(self, lit: int) -> Optional[bool]:
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def add_clause(self, lits: list[int]) -> bool:
        """Add at decision level 0. False if immediately unsatisfiable."""
        assert self.decision_level() == 0
        if not self.ok:
            return False
        out, seen = [], set()
        for l in lits:
            if -l in seen:
                return True
            if l in seen:
                continue
            val = self.value(l)
            if val is True:
                return True
            if val is False:
                continue
            seen.add(l)
            out.append(l)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._enqueue(out[0], None)
            return True
        self._attach(out)
        return True

    def _attach(self, clause: list[int]) -> None:
        self.clauses.append(clause)
        self.watches.setdefault(clause[0], []).append(clause)
        self.watches.setdefault(clause[1], []).append(clause)

    def _learn(self, clause: list[int]) -> None:
        """Attach a learnt clause (first literal is the asserting one)."""
        if len(clause) == 1:
            self._enqueue(clause[0], None)
            return
        self._attach(clause)
        self._enqueue(clause[0], clause)

    # -- trail ------------------------------------------------------------

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def cancel(self) -> None:
        """Back to decision level 0 (e.g. before adding clauses between
        incremental solve calls)."""
        self._cancel_until(0)

    def _enqueue(self, lit: int, reason: Optional[list[int]]) -> None:
        self.assign[abs(lit)] = lit > 0
        self.level[abs(lit)] = self.decision_level()
        self.reason[abs(lit)] = reason
        self.trail.append(lit)

    def _new_level(self) -> None:
        self.trail_lim.append(len(self.trail))
        self.theory_marks.append(self.theory.mark())

    def _cancel_until(self, lvl: int) -> None:
        if self.decision_level() <= lvl:
            return
        bound = self.trail_lim[lvl]
        for lit in reversed(self.trail[bound:]):
            v = abs(lit)
            del self.assign[v]
            del self.level[v]
            self.reason[v] = None
            heapq.heappush(self.order, (-self.activity[v], v))
        del self.trail[bound:]
        self.theory.backtrack(self.theory_marks[lvl])
        del self.trail_lim[lvl:]
        del self.theory_marks[lvl:]
        self.qhead = len(self.trail)

    # -- propagation -------------------------------------------------------

    def _propagate(self) -> Optional[list[int]]:
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            conf = self._propagate_watches(-lit)
            if conf is not None:
                return conf
            if self.is_theory_lit(lit):
                tc = self.theory.on_assert(lit)
                if tc is not None:
                    return [-l for l in tc]
        return None

    def _propagate_watches(self, false_lit: int) -> Optional[list[int]]:
        watchlist = self.watches.get(false_lit)
        if not watchlist:
            return None
        i = 0
        while i < len(watchlist):
            clause = watchlist[i]
            if clause[0] == false_lit:
                clause[0], clause[1] = clause[1], clause[0]
            other = clause[0]
            if self.value(other) is True:
                i += 1
                continue
            moved = False
            for j in range(2, len(clause)):
                if self.value(clause[j]) is not False:
                    clause[1], clause[j] = clause[j], clause[1]
                    self.watches.setdefault(clause[1], []).append(clause)
                    watchlist[i] = watchlist[-1]
                    watchlist.pop()
                    moved = True
                    break
            if moved:
                continue
            if self.value(other) is False:
                return clause
            self._enqueue(other, clause)
            self.stats["propagations"] += 1
            i += 1
        return None

    # -- conflict analysis ----------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for k in self.activity:
                self.activity[k] *= 1e-100
            self.var_inc *= 1e-100
            self.order = [(-self.activity[x], x) for _a, x in self.order]
            heapq.heapify(self.order)
        elif v not in self.assign:
            heapq.heappush(self.order, (-self.activity[v], v))

    def _analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        """First-UIP learning; conflict must contain >=1 literal of the
        current (nonzero) decision level."""
        learnt: list[int] = []
        seen: set[int] = set()
        counter = 0
        lit = None
        reason = conflict
        idx = len(self.trail) - 1
        cur = self.decision_level()
        while True:
            for q in reason:
                v = abs(q)
                if lit is not None and v == abs(lit):
                    continue
                if v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            lit = -p
            seen.discard(abs(p))
            counter -= 1
            idx -= 1
            if counter == 0:
                break
            reason = self.reason[abs(p)] or []
        learnt.insert(0, lit)
        if len(learnt) == 1:
            return learnt, 0
        bt = max(self.level[abs(q)] for q in learnt[1:])
        for k in range(2, len(learnt)):
            if self.level[abs(learnt[k])] == bt:
                learnt[1], learnt[k] = learnt[k], learnt[1]
                break
        return learnt, bt

    def _analyze_final(self, p: int, assumptions: set[int]) -> list[int]:
        """Assumptions responsible for forcing ¬p; p itself included."""
        core = {p}
        if self.decision_level() == 0:
            return sorted(core, key=abs)
        seen = {abs(p)}
        start = self.trail_lim[0]
        for i in range(len(self.trail) - 1, start - 1, -1):
            q = self.trail[i]
            v = abs(q)
            if v not in seen:
                continue
            r = self.reason.get(v)
            if r is None:
                if q in assumptions:
                    core.add(q)
            else:
                for l in r:
                    if self.level[abs(l)] > 0:
                        seen.add(abs(l))
            seen.discard(v)
        return sorted(core, key=abs)

    # -- main loop ---------------------------------------------------------------

    def solve(self, assumptions: list[int] = ()) -> bool:
        """True = sat; False = unsat, with self.core the subset of
        assumptions used by the refutation (empty if none needed)."""
        self.core = []
        if not self.ok:
            return False
        assume = list(assumptions)
        aset = set(assume)
        restart_at = 256
        conflicts = 0
        while True:
            conf = self._propagate()
            if conf is not None:
                self.stats["conflicts"] += 1
                conflicts += 1
                cl = self._conflict_levels(conf)
                if cl == 0:
                    self._cancel_until(0)
                    self.ok = False
                    return False
                if cl < self.decision_level():
                    self._cancel_until(cl)
                learnt, bt = self._analyze(conf)
                self._cancel_until(bt)
                self._learn(learnt)
                if conflicts >= restart_at:
                    conflicts = 0
                    restart_at = int(restart_at * 1.5)
                    self._cancel_until(0)
                continue
            if self.decision_level() < len(assume):
                p = assume[self.decision_level()]
                val = self.value(p)
                if val is False:
                    self.core = self._analyze_final(p, aset)
                    self._cancel_until(0)
                    return False
                self._new_level()
                if val is None:
                    self._enqueue(p, None)
                continue
            tc = self.theory.check(full=False)
            if tc is not None:
                if not self._theory_conflict(tc):
                    return False
                conflicts += 1
                continue
            lit = self._pick_branch()
            if lit is None:
                tc = self.theory.check(full=True)
                if tc is None:
                    return True
                if not self._theory_conflict(tc):
                    return False
                conflicts += 1
                continue
            self.stats["decisions"] += 1
            self._new_level()
            self._enqueue(lit, None)

    def _conflict_levels(self, conf: list[int]) -> int:
        return max((self.level.get(abs(l), 0) for l in conf), default=0)

    def _theory_conflict(self, tc: list[int]) -> bool:
        conf = [-l for l in tc]
        self.stats["conflicts"] += 1
        lvl = self._conflict_levels(conf)
        if lvl == 0:
            self._cancel_until(0)
            self.ok = False
            return False
        if lvl < self.decision_level():
            self._cancel_until(lvl)
        learnt, bt = self._analyze(conf)
        self._cancel_until(bt)
        self._learn(learnt)
        return True

    def _pick_branch(self) -> Optional[int]:
        # lazy heap: entries may be stale (assigned vars or outdated
        # activities); ties break toward the smallest index via the heap
        # tuple ordering, keeping decisions deterministic
        while self.order:
            act, v = self.order[0]
            if v in self.assign or -act != self.activity[v]:
                heapq.heappop(self.order)
                continue
            return -v
        return None
