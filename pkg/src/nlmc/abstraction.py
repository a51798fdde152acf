"""LRA+EUF over-approximation of nonlinear formulas and systems.

Every multiplication of two non-constant factors becomes an application
of the uninterpreted binary function fmul (constant multiplications are
`scale` nodes and stay untouched).  Static sign/zero axioms about
multiplication are attached at abstraction time; commutativity is
structural (fmul arguments are canonically ordered), so the
corresponding axiom instances are reflexive and only emitted under the
fidelity flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import terms
from .refinement import Axiom
from .terms import Term
from .vmt import TransitionSystem

ZERO = terms.ZERO


def abstract_term(f: Term) -> Term:
    """mul -> fmul everywhere; scale nodes untouched."""

    def repl(t: Term) -> Term:
        if t.kind == "mul":
            return terms.fmul(t.args[0], t.args[1])
        return t

    return terms.map_terms(f, repl)


def concretize(f: Term) -> Term:
    """fmul -> mul everywhere; inverse of abstraction on its images."""

    def repl(t: Term) -> Term:
        if t.kind == "fmul":
            return terms.mul(t.args[0], t.args[1])
        return t

    return terms.map_terms(f, repl)


def _sign_axioms(m: Term) -> tuple[list[Term], list[Term]]:
    x, y = m.args
    nx, ny = terms.neg(x), terms.neg(y)
    new_terms = [terms.fmul(nx, ny), terms.fmul(nx, y), terms.fmul(x, ny)]
    conjs = [
        terms.eq(m, new_terms[0]),
        terms.eq(m, terms.neg(new_terms[1])),
        terms.eq(m, terms.neg(new_terms[2])),
    ]
    # fmul(x,x): the last two coincide after canonicalization
    out, seen = [], set()
    for c in conjs:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out, new_terms


def _zero_axioms(m: Term) -> list[Term]:
    x, y = m.args
    if x == y:
        # degenerate square form
        return [
            terms.iff(terms.eq(x, ZERO), terms.eq(m, ZERO)),
            terms.implies(terms.not_(terms.eq(x, ZERO)), terms.gt(m, ZERO)),
        ]
    xp, xn = terms.gt(x, ZERO), terms.lt(x, ZERO)
    yp, yn = terms.gt(y, ZERO), terms.lt(y, ZERO)
    return [
        terms.iff(terms.or_(terms.eq(x, ZERO), terms.eq(y, ZERO)),
                  terms.eq(m, ZERO)),
        terms.implies(terms.or_(terms.and_(xp, yp), terms.and_(xn, yn)),
                      terms.gt(m, ZERO)),
        # the paper's third implication has a duplicated disjunct (an
        # evident typo); the symmetric mixed-sign form is implemented
        terms.implies(terms.or_(terms.and_(xn, yp), terms.and_(xp, yn)),
                      terms.lt(m, ZERO)),
    ]


def static_axioms(fmuls: list[Term], sign: bool = True,
                  commutativity: bool = False) -> tuple[list[Axiom], list[Term]]:
    """Static axioms for each fmul term; returns (axioms, new fmul terms
    introduced by the Sign instances)."""
    axioms: list[Axiom] = []
    introduced: list[Term] = []
    seen_new: set[Term] = set()
    for m in fmuls:
        if commutativity:
            # structurally reflexive under canonical argument ordering
            axioms.append(Axiom(terms.eq(m, terms.fmul(m.args[1], m.args[0])),
                                "static", fmul=m))
        if sign:
            conjs, new = _sign_axioms(m)
            for c in conjs:
                axioms.append(Axiom(c, "static", fmul=m))
            for t in new:
                if t not in seen_new and t not in fmuls:
                    seen_new.add(t)
                    introduced.append(t)
        for c in _zero_axioms(m):
            axioms.append(Axiom(c, "static", fmul=m))
    return axioms, introduced


@dataclass
class AbstractionResult:
    abstract_formula: Term
    fmuls: list[Term]
    static_axioms: list[Axiom] = field(default_factory=list)

    def with_axioms(self) -> Term:
        return terms.and_(self.abstract_formula,
                          *[a.formula for a in self.static_axioms])


def abstract_formula(f: Term, sign: bool = True,
                     commutativity: bool = False) -> AbstractionResult:
    af = abstract_term(f)
    fmuls = terms.fmuls_of(af)
    axioms, introduced = static_axioms(fmuls, sign, commutativity)
    return AbstractionResult(af, fmuls + introduced, axioms)


def _frame_variants(m: Term, state_vars: set[str]) -> list[Term]:
    """For a transition-relation fmul: its instances on the current and the
    next frame (mixed-frame terms stay as-is)."""
    vs = terms.vars_of(m)
    cur = [v for v in vs if not terms.is_primed(v)]
    nxt = [v for v in vs if terms.is_primed(v)]
    if cur and not nxt:
        primed = terms.substitute(m, {v: terms.prime(v) for v in cur})
        return [m, primed]
    if nxt and not cur:
        unprimed = terms.substitute(m, {v: terms.unprime(v) for v in nxt})
        return [unprimed, m]
    return [m]


def abstract_system(ts: TransitionSystem, sign: bool = True,
                    commutativity: bool = False) -> TransitionSystem:
    """⟨X, Î, T̂⟩ with properties abstracted; static axioms conjoined to Î
    and (instantiated on both frames) to T̂."""
    state = {v.data for v in ts.variables}
    init_a = abstract_term(ts.init)
    init_ax, _new = static_axioms(terms.fmuls_of(init_a), sign, commutativity)
    init = terms.and_(init_a, *[a.formula for a in init_ax])

    trans_a = abstract_term(ts.trans)
    variants: list[Term] = []
    seen: set[Term] = set()
    for m in terms.fmuls_of(trans_a):
        for v in _frame_variants(m, state):
            if v not in seen:
                seen.add(v)
                variants.append(v)
    trans_ax, _new = static_axioms(variants, sign, commutativity)
    trans = terms.and_(trans_a, *[a.formula for a in trans_ax])

    props = [abstract_term(p) for p in ts.properties]
    return TransitionSystem(ts.variables, init, trans, props)
