"""Tangent-plane and monotonicity refinement lemmas.

A spurious LRA+EUF model gives each fmul(s,t) a value different from the
product of its argument values.  Tangent lemmas instantiate the plane
b*x + a*y - a*b at chosen points and bound fmul on the four quadrants
around the point; frontier tracking adds companion points so every
refined band has both an upper and a lower bound; monotonicity lemmas
relate applications with dominating argument magnitudes.  All lemmas are
valid for fmul interpreted as real multiplication, so the abstraction
only ever tightens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import smt2, terms
from .terms import Model, Term

ZERO = terms.ZERO
ROUNDING_THRESHOLD_DEFAULT = 10**6


class RefinementError(Exception):
    pass


@dataclass(frozen=True)
class Axiom:
    formula: Term
    kind: str  # "tangent" | "monotonicity" | "static"
    points: tuple[tuple[Fraction, Fraction], ...] = ()
    fmul: Optional[Term] = None

    def sexpr(self) -> str:
        parts = [f"(axiom :kind {self.kind}"]
        if self.fmul is not None:
            parts.append(f":fmul {smt2.serialize_term(self.fmul)}")
        if self.points:
            pts = " ".join(
                f"({smt2.serialize_fraction(a)} {smt2.serialize_fraction(b)})"
                for a, b in self.points)
            parts.append(f":points ({pts})")
        parts.append(f":formula {smt2.serialize_term(self.formula)})")
        return " ".join(parts)


@dataclass(frozen=True)
class Frontier:
    """Interval pair within which the refined fmul has both bounds."""

    lx: Fraction = Fraction(0)
    ux: Fraction = Fraction(0)
    ly: Fraction = Fraction(0)
    uy: Fraction = Fraction(0)

    def __post_init__(self):
        if self.lx > self.ux or self.ly > self.uy:
            raise RefinementError(f"degenerate frontier {self}")

    def as_tuple(self):
        return (self.lx, self.ux, self.ly, self.uy)


def tangent_plane(a: Fraction, b: Fraction,
                  x: Term | None = None, y: Term | None = None) -> Term:
    """b*x + a*y - a*b over the given terms (placeholders x, y by default)."""
    a, b = Fraction(a), Fraction(b)
    x = x if x is not None else terms.var("x")
    y = y if y is not None else terms.var("y")
    return terms.add(terms.scale(b, x), terms.scale(a, y), terms.rcon(-a * b))


def tangent_lemma(m: Term, a: Fraction, b: Fraction) -> Axiom:
    """Tangent-plane lemma for fmul term m at point (a, b): the two
    multiplication-line equalities, the four quadrant bounds against the
    plane, and the guarded single-step forms of the lines (the latter keep
    the lines effective under purely positional congruence, since
    canonical argument ordering flips one of the two line applications)."""
    a, b = Fraction(a), Fraction(b)
    if m.kind != "fmul":
        raise RefinementError(f"tangent lemma needs an fmul term, got {m!r}")
    s, t = m.args
    ca, cb = terms.rcon(a), terms.rcon(b)
    plane = tangent_plane(a, b, s, t)
    line_a = terms.scale(a, t)
    line_b = terms.scale(b, s)
    conjs = [
        terms.eq(terms.fmul(ca, t), line_a),
        terms.eq(terms.fmul(s, cb), line_b),
        terms.implies(
            terms.or_(terms.and_(terms.gt(s, ca), terms.lt(t, cb)),
                      terms.and_(terms.lt(s, ca), terms.gt(t, cb))),
            terms.lt(m, plane)),
        terms.implies(
            terms.or_(terms.and_(terms.lt(s, ca), terms.lt(t, cb)),
                      terms.and_(terms.gt(s, ca), terms.gt(t, cb))),
            terms.gt(m, plane)),
        terms.implies(terms.eq(s, ca), terms.eq(m, line_a)),
        terms.implies(terms.eq(t, cb), terms.eq(m, line_b)),
    ]
    return Axiom(terms.and_(*conjs), "tangent", ((a, b),), m)


def _oversized(c: Fraction, threshold: int) -> bool:
    return abs(c.numerator) > threshold or c.denominator > threshold


def _round_coord(c: Fraction, threshold: int) -> list[Fraction]:
    if not _oversized(c, threshold):
        return [c]
    lo, hi = Fraction(math.floor(c)), Fraction(math.ceil(c))
    return [lo] if lo == hi else [lo, hi]


def select_points(m: Term, model: Model, all_points: bool = False,
                  rounding_threshold: int = ROUNDING_THRESHOLD_DEFAULT,
                  ) -> list[tuple[Fraction, Fraction]]:
    """Tangent instantiation points for a spurious fmul: the model point,
    optionally the literal reciprocal points, each split into floor/ceil
    pairs per oversized coordinate."""
    s, t = m.args
    vs = terms.evaluate(s, model)
    vt = terms.evaluate(t, model)
    vm = model.fmuls[m]
    raw = [(vs, vt)]
    if all_points and vm != 0:
        raw.append((Fraction(1) / vm, vt))
        raw.append((vs, Fraction(1) / vm))
    out: list[tuple[Fraction, Fraction]] = []
    seen = set()
    for (pa, pb) in raw:
        for ra in _round_coord(pa, rounding_threshold):
            for rb in _round_coord(pb, rounding_threshold):
                if (ra, rb) not in seen:
                    seen.add((ra, rb))
                    out.append((ra, rb))
    return out


def frontier_update(fr: Frontier, point: tuple[Fraction, Fraction],
                    ) -> tuple[list[tuple[Fraction, Fraction]], Frontier]:
    """Companion instantiation points and the widened frontier for a new
    tangent point.  Per-axis rule: a coordinate outside its interval pairs
    the opposite bound of that axis with the other coordinate; two points
    sharing a coordinate bound fmul on the whole band between them, which
    is what maintains the frontier invariant.  The paper's four corner
    cases are exactly the superposition of the two per-axis cases."""
    a, b = Fraction(point[0]), Fraction(point[1])
    extras: list[tuple[Fraction, Fraction]] = []
    if b > fr.uy:
        extras.append((a, fr.ly))
    elif b < fr.ly:
        extras.append((a, fr.uy))
    if a > fr.ux:
        extras.append((fr.lx, b))
    elif a < fr.lx:
        extras.append((fr.ux, b))
    fr2 = Frontier(min(fr.lx, a), max(fr.ux, a), min(fr.ly, b), max(fr.uy, b))
    return extras, fr2


def _abs(t: Term) -> Term:
    return terms.abs_term(t)


def monotonicity_lemmas(fmuls: list[Term], model: Model) -> list[Axiom]:
    """One lemma per ordered pair whose model values violate monotonicity
    of |x*y| in |x| and |y|."""
    vals = []
    for m in fmuls:
        s, t = m.args
        vals.append((m, abs(terms.evaluate(s, model)), abs(terms.evaluate(t, model)),
                     abs(model.fmuls[m])))
    out = []
    for i, (m1, s1, t1, w1) in enumerate(vals):
        for j, (m2, s2, t2, w2) in enumerate(vals):
            if i == j:
                continue
            if s1 <= s2 and t1 <= t2 and w1 > w2:
                a1, b1 = m1.args
                a2, b2 = m2.args
                f = terms.implies(
                    terms.and_(terms.le(_abs(a1), _abs(a2)),
                               terms.le(_abs(b1), _abs(b2))),
                    terms.le(_abs(m1), _abs(m2)))
                out.append(Axiom(f, "monotonicity", (), m1))
    return out


def spurious_fmuls(fmuls: list[Term], model: Model) -> list[Term]:
    out = []
    for m in fmuls:
        s, t = m.args
        if model.fmuls[m] != terms.evaluate(s, model) * terms.evaluate(t, model):
            out.append(m)
    return out


def refine(model: Model, fmuls: list[Term], frontiers: dict[Term, Frontier],
           all_points: bool = False,
           rounding_threshold: int = ROUNDING_THRESHOLD_DEFAULT,
           ) -> list[Axiom]:
    """All tangent lemmas (selected points plus frontier companions,
    frontiers updated in place) for every spurious fmul, plus every
    triggered monotonicity lemma.  The emitted conjunction is false under
    the blocked model (checked; internal error otherwise)."""
    bad = spurious_fmuls(fmuls, model)
    if not bad:
        raise RefinementError("refine called on a non-spurious model")
    axioms: list[Axiom] = []
    seen: set[Term] = set()

    def emit(ax: Axiom) -> None:
        if ax.formula not in seen:
            seen.add(ax.formula)
            axioms.append(ax)

    for m in bad:
        fr = frontiers.get(m, Frontier())
        for p in select_points(m, model, all_points, rounding_threshold):
            emit(tangent_lemma(m, *p))
            extras, fr = frontier_update(fr, p)
            for ep in extras:
                emit(tangent_lemma(m, *ep))
        frontiers[m] = fr
    for ax in monotonicity_lemmas(fmuls, model):
        emit(ax)

    def blocked() -> bool:
        ext = model.extended_with_products([a.formula for a in axioms])
        return not all(terms.evaluate(a.formula, ext) for a in axioms)

    if not blocked():
        # Both coordinates of a point can be oversized, in which case the
        # rounded instantiations may all miss the model; fall back to the
        # exact model point, whose line equalities always block.  Values
        # beyond the fallback cap never enter lemmas: asserting them would
        # poison every later simplex pivot, and the runs that produce them
        # (convergence toward irrational witnesses) end in unknown anyway.
        cap = 64
        for m in bad:
            s, t = m.args
            vs, vt = terms.evaluate(s, model), terms.evaluate(t, model)
            if all(v.numerator.bit_length() <= cap
                   and v.denominator.bit_length() <= cap for v in (vs, vt)):
                emit(tangent_lemma(m, vs, vt))
        if not blocked():
            raise RefinementError("refinement produced no blocking axiom")
    return axioms
