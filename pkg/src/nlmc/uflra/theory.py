"""QF_UFLRA decision procedure: CDCL over a simplex theory backend, with
lazy functional-consistency lemmas for fmul applications.

The solver object is persistent and incremental: assertion frames are
guarded by selector variables that are assumed during solving, so a
popped frame costs nothing and everything learned stays valid.  Each
formula is rewritten once (Real ites lifted to guarded fresh variables,
equalities split into inequality pairs, fmul applications replaced by
fresh variables), Tseitin-encoded against shared gate/atom caches, and
solved by CDCL with simplex bound propagation.  Models are screened for
congruence violations among fmul applications (equal argument values but
different application values); violated pairs get a permanent linking
lemma and the search resumes without rebuilding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .. import terms
from ..terms import BOOL, REAL, Term
from . import sat
from .simplex import Conflict, Delta, Simplex

_F0 = Fraction(0)
_F1 = Fraction(1)


class SolveResult:
    __slots__ = ("status", "model", "core")

    def __init__(self, status: str, model=None, core=None):
        self.status = status  # "sat" | "unsat"
        self.model = model  # (dict name -> value, dict app term -> Fraction)
        self.core = core  # list of failed assumption selectors


def _linear(t: Term, real_ix) -> tuple[dict[int, Fraction], Fraction]:
    """Term -> (var index -> coef, constant); fmul applications are leaves."""
    coefs: dict[int, Fraction] = {}
    const = _F0
    stack = [(t, _F1)]
    while stack:
        s, c = stack.pop()
        k = s.kind
        if k == "const":
            const += c * s.data
        elif k in ("var", "fmul"):
            i = real_ix(s)
            coefs[i] = coefs.get(i, _F0) + c
        elif k == "add":
            for a in s.args:
                stack.append((a, c))
        elif k == "scale":
            stack.append((s.args[0], c * s.data))
        else:
            raise ValueError(f"non-linear term reached the LRA core: {s.kind}")
    return {i: v for i, v in coefs.items() if v != 0}, const


class IncrementalUflra(sat.TheoryListener):
    """Persistent incremental QF_UFLRA solver."""

    def __init__(self):
        self.solver = sat.Solver(self)
        self.simplex = Simplex()
        self.real_vars: dict[str, int] = {}
        self.bool_vars: dict[str, int] = {}
        self.apps: dict[Term, tuple[Term, Term]] = {}
        self.app_names: dict[Term, str] = {}
        self.slacks: dict[tuple, int] = {}
        self.atom_action: dict[int, tuple[int, tuple, tuple]] = {}
        self.atom_vars: dict[Term, int] = {}
        self.gate_vars: dict[Term, int] = {}
        self._ite_count = 0
        self._linked_pairs: set[tuple[Term, Term]] = set()
        self._true_var = self.solver.new_var()
        self.solver.add_clause([self._true_var])
        self.solver.is_theory_lit = lambda lit: abs(lit) in self.atom_action
        self._last_vals: Optional[list[Fraction]] = None

    # -- public API -----------------------------------------------------------

    def new_selector(self) -> int:
        return self.solver.new_var()

    def assert_term(self, f: Term, selector: Optional[int] = None) -> None:
        """Assert f, optionally guarded by a selector variable that must be
        assumed for the assertion to be active."""
        self.solver.cancel()
        root = self._encode_assertion(f)
        if selector is None:
            self.solver.add_clause([root])
        else:
            self.solver.add_clause([-selector, root])

    def solve(self, assumptions: list[int]) -> SolveResult:
        self.solver.cancel()
        rounds = 0
        while True:
            ok = self.solver.solve(assumptions)
            if not ok:
                core = list(self.solver.core)
                self.solver.cancel()
                return SolveResult("unsat", core=core)
            model, appvals = self._extract_model()
            viol = self._congruence_violations(appvals)
            self.solver.cancel()
            if not viol:
                return SolveResult("sat", model=(model, appvals))
            for (t1, t2) in viol:
                a1, b1 = t1.args
                a2, b2 = t2.args
                lemma = terms.implies(
                    terms.and_(terms.eq(a1, a2), terms.eq(b1, b2)),
                    terms.eq(t1, t2))
                self.assert_term(lemma)
            rounds += 1
            if rounds > 100000:
                raise RuntimeError("congruence refinement did not converge")

    # -- preprocessing ----------------------------------------------------------

    def _encode_assertion(self, f: Term) -> int:
        f2, guards = self._lift_ites(f)
        root = self._tseitin(self._expand_eq(f2))
        for g in guards:
            # ite-variable definitions are conservative, so they stay
            # unconditional even for guarded assertions
            self.solver.add_clause([self._tseitin(self._expand_eq(g))])
        return root

    def _lift_ites(self, f: Term) -> tuple[Term, list[Term]]:
        guards: list[Term] = []

        def repl(t: Term) -> Term:
            # children are already ite-free here (map_terms is bottom-up)
            if t.kind != "ite":
                return t
            c, a, b = t.args
            self._ite_count += 1
            v = terms.var(f"!ite{self._ite_count}", REAL)
            guards.append(terms.implies(c, terms.eq(v, a)))
            guards.append(terms.implies(terms.not_(c), terms.eq(v, b)))
            return v

        return terms.map_terms(f, repl), guards

    def _expand_eq(self, f: Term) -> Term:
        def repl(t: Term) -> Term:
            if t.kind == "eq":
                a, b = t.args
                return terms.and_(terms.le(a, b), terms.le(b, a))
            return t

        return terms.map_terms(f, repl)

    # -- symbol tables -------------------------------------------------------------

    def _real_ix(self, t: Term) -> int:
        if t.kind == "fmul":
            return self._app_ix(t)
        name = t.data
        i = self.real_vars.get(name)
        if i is None:
            i = self.real_vars[name] = self.simplex.new_var()
        return i

    def _app_ix(self, t: Term) -> int:
        name = self.app_names.get(t)
        if name is None:
            name = f"!app{len(self.apps)}"
            self.app_names[t] = name
            self.apps[t] = (t.args[0], t.args[1])
            self.real_vars[name] = self.simplex.new_var()
            # register nested applications before any model extraction
            for arg in t.args:
                for s in terms.fmuls_of(arg):
                    self._app_ix(s)
        return self.real_vars[name]

    def _bool_var(self, name: str) -> int:
        v = self.bool_vars.get(name)
        if v is None:
            v = self.bool_vars[name] = self.solver.new_var()
        return v

    # -- atoms -------------------------------------------------------------------

    def _atom_lit(self, t: Term) -> int:
        v = self.atom_vars.get(t)
        if v is not None:
            return v
        coefs, const = _linear(terms.sub(t.args[0], t.args[1]), self._real_ix)
        # t is: sum(coefs) + const  <= / <  0, i.e. form <= -const
        if not coefs:
            val = const <= 0 if t.kind == "le" else const < 0
            lit = self._true_var if val else -self._true_var
            self.atom_vars[t] = lit
            return lit
        items = sorted(coefs.items())
        lead = items[0][1]
        # divide by the signed leading coefficient: forms equal up to any
        # nonzero scaling share one slack variable
        flip = lead < 0
        norm = tuple((i, c / lead) for i, c in items)
        target = -const / lead
        if len(norm) == 1:
            sv = norm[0][0]
        else:
            sv = self.slacks.get(norm)
            if sv is None:
                sv = self.slacks[norm] = self.simplex.new_slack(
                    {i: c for i, c in norm})
        strict = t.kind == "lt"
        if not flip:
            pos = ("up", Delta(target, Fraction(-1) if strict else _F0))
            neg = ("lo", Delta(target, _F0 if strict else _F1))
        else:
            pos = ("lo", Delta(target, _F1 if strict else _F0))
            neg = ("up", Delta(target, _F0 if strict else Fraction(-1)))
        v = self.solver.new_var()
        self.atom_vars[t] = v
        self.atom_action[v] = (sv, pos, neg)
        return v

    # -- tseitin --------------------------------------------------------------------

    def _tseitin(self, t: Term) -> int:
        k = t.kind
        if k == "const":
            return self._true_var if t.data else -self._true_var
        if k == "var":
            if t.sort != BOOL:
                raise ValueError(f"real variable in boolean position: {t.data}")
            return self._bool_var(t.data)
        if k in ("le", "lt"):
            return self._atom_lit(t)
        if k == "not":
            return -self._tseitin(t.args[0])
        g = self.gate_vars.get(t)
        if g is not None:
            return g
        if k == "and":
            lits = [self._tseitin(a) for a in t.args]
            g = self.solver.new_var()
            for l in lits:
                self.solver.add_clause([-g, l])
            self.solver.add_clause([g] + [-l for l in lits])
        elif k == "or":
            lits = [self._tseitin(a) for a in t.args]
            g = self.solver.new_var()
            for l in lits:
                self.solver.add_clause([g, -l])
            self.solver.add_clause([-g] + lits)
        elif k == "implies":
            a = self._tseitin(t.args[0])
            b = self._tseitin(t.args[1])
            g = self.solver.new_var()
            self.solver.add_clause([-g, -a, b])
            self.solver.add_clause([g, a])
            self.solver.add_clause([g, -b])
        elif k == "iff":
            a = self._tseitin(t.args[0])
            b = self._tseitin(t.args[1])
            g = self.solver.new_var()
            self.solver.add_clause([-g, -a, b])
            self.solver.add_clause([-g, a, -b])
            self.solver.add_clause([g, a, b])
            self.solver.add_clause([g, -a, -b])
        else:
            raise ValueError(f"boolean structure expected, got {k}")
        self.gate_vars[t] = g
        return g

    # -- theory listener ----------------------------------------------------------------

    def on_assert(self, lit: int) -> Optional[list[int]]:
        act = self.atom_action.get(abs(lit))
        if act is None:
            return None
        sv, pos, neg = act
        which, bound = pos if lit > 0 else neg
        try:
            if which == "up":
                self.simplex.assert_upper(sv, bound, lit)
            else:
                self.simplex.assert_lower(sv, bound, lit)
        except Conflict as c:
            return c.reasons
        return None

    def mark(self):
        return self.simplex.mark()

    def backtrack(self, mark) -> None:
        self.simplex.backtrack(mark)

    def check(self, full: bool) -> Optional[list[int]]:
        try:
            self.simplex.check()
        except Conflict as c:
            return c.reasons
        return None

    # -- models ---------------------------------------------------------------------------

    def _dval(self, t: Term) -> Delta:
        coefs, const = _linear(t, self._real_ix)
        q, d = const, _F0
        for i, c in coefs.items():
            b = self.simplex.beta[i]
            q += c * b.q
            d += c * b.d
        return Delta(q, d)

    def _extract_model(self):
        # separation: argument values of applications that differ now must
        # stay distinct after delta resolution
        argvals: list[Delta] = []
        for t, (a, b) in self.apps.items():
            argvals.append(self._dval(a))
            argvals.append(self._dval(b))
        seps = []
        seen: dict[tuple, Delta] = {}
        uniq: list[Delta] = []
        for v in argvals:
            key = (v.q, v.d)
            if key not in seen:
                seen[key] = v
                uniq.append(v)
        for i in range(len(uniq)):
            for j in range(i + 1, len(uniq)):
                seps.append((uniq[i], uniq[j]))
        d0 = self.simplex.resolve_delta(seps)
        vals = self.simplex.model(d0)
        model: dict[str, object] = {}
        for name, ix in self.real_vars.items():
            if not name.startswith("!"):
                model[name] = vals[ix]
        for name, v in self.bool_vars.items():
            model[name] = bool(self.solver.assign.get(v, False))
        appvals: dict[Term, Fraction] = {}
        for t in self.apps:
            appvals[t] = vals[self.real_vars[self.app_names[t]]]
        self._last_vals = vals
        return model, appvals

    def _rval(self, t: Term, vals) -> Fraction:
        coefs, const = _linear(t, self._real_ix)
        out = const
        for i, c in coefs.items():
            out += c * vals[i]
        return out

    def _congruence_violations(self, appvals) -> list[tuple[Term, Term]]:
        vals = self._last_vals
        entries = []
        for t, (a, b) in self.apps.items():
            entries.append((t, self._rval(a, vals), self._rval(b, vals),
                            appvals[t]))
        out = []
        by_args: dict[tuple, list] = {}
        for (t, av, bv, w) in entries:
            by_args.setdefault((av, bv), []).append((t, w))
        for group in by_args.values():
            for i in range(len(group)):
                t1, w1 = group[i]
                for j in range(i + 1, len(group)):
                    t2, w2 = group[j]
                    if w1 != w2:
                        key = (t1, t2) if t1.key() <= t2.key() else (t2, t1)
                        if key not in self._linked_pairs:
                            self._linked_pairs.add(key)
                            out.append(key)
        return out


class UflraCheck:
    """One-shot satisfiability check over (label-or-None, formula) pairs."""

    def __init__(self, assertions: list[tuple[Optional[str], Term]]):
        self.assertions = assertions

    def run(self) -> SolveResult:
        inc = IncrementalUflra()
        selectors: list[int] = []
        labels: dict[int, str] = {}
        for label, f in self.assertions:
            if label is None:
                inc.assert_term(f)
            else:
                s = inc.new_selector()
                selectors.append(s)
                labels[s] = label
                inc.assert_term(f, selector=s)
        r = inc.solve(selectors)
        if r.status == "unsat":
            return SolveResult("unsat", core=[labels[s] for s in r.core
                                              if s in labels])
        return r
