"""Exact-rational term and formula algebra.

Terms are immutable, canonicalized at construction, and compare/hash
structurally, so they can be used as dict keys and shared freely between
threads.  All arithmetic is over ``fractions.Fraction``; there is no
floating point anywhere in the core.

Canonical form rules:

* constant-only subterms fold at construction; ``scale`` absorbs nested
  constants and coefficients (``c * x`` is always a ``scale`` node, never
  a ``mul``);
* ``mul``/``fmul``/``iff`` arguments and n-ary ``add``/``and``/``or``
  children are stored sorted under a fixed total term order (variables
  first by name, then constants, then by structure), which makes
  commutativity structural;
* ``mul`` children are both non-constant Real terms; ``fmul`` arguments
  may be anything Real (refinement lemmas apply fmul to constants and to
  negated arguments).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

REAL = "Real"
BOOL = "Bool"

Value = Union[Fraction, bool]

# Rank of each node kind in the total term order.
_KIND_RANK = {
    "var": 0,
    "const": 1,
    "scale": 2,
    "add": 3,
    "mul": 4,
    "fmul": 5,
    "ite": 6,
    "le": 7,
    "lt": 8,
    "eq": 9,
    "not": 10,
    "and": 11,
    "or": 12,
    "implies": 13,
    "iff": 14,
}


class TermError(Exception):
    """Ill-sorted construction or malformed operation on terms."""


class UnassignedSymbolError(KeyError):
    """Evaluation hit a variable or fmul term with no model entry."""

    def __init__(self, symbol: str):
        super().__init__(symbol)
        self.symbol = symbol

    def __str__(self) -> str:
        return f"unassigned symbol: {self.symbol}"


class Term:
    """A node of the term DAG. Do not instantiate directly; use the
    constructor functions (var, rcon, add, fmul, ...) which enforce
    sorting and canonical form."""

    __slots__ = ("kind", "args", "data", "sort", "_hash", "_key")

    def __init__(self, kind: str, args: tuple, data, sort: str):
        self.kind = kind
        self.args = args
        self.data = data
        self.sort = sort
        self._key = None
        self._hash = None

    def key(self):
        """Total-order key: variables first (by name), then constants,
        then composite terms by (rank, data, children)."""
        k = self._key
        if k is None:
            if self.kind == "var":
                k = (0, (self.sort, self.data), ())
            elif self.kind == "const":
                v = self.data
                if isinstance(v, bool):
                    k = (1, (0, 1 if v else 0, 1), ())
                else:
                    k = (1, (1, v.numerator, v.denominator), ())
            else:
                rank = _KIND_RANK[self.kind]
                if self.kind == "scale":
                    data = (self.data.numerator, self.data.denominator)
                else:
                    data = ()
                k = (rank, data, tuple(a.key() for a in self.args))
            self._key = k
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented
        return self.key() == other.key()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hash
        if h is None:
            h = self._hash = hash(self.key())
        return h

    def __repr__(self):
        from . import smt2

        return f"Term({smt2.serialize_term(self)})"

    def is_const(self) -> bool:
        return self.kind == "const"

    @property
    def name(self) -> str:
        if self.kind != "var":
            raise TermError("name of non-variable")
        return self.data

    @property
    def value(self):
        if self.kind != "const":
            raise TermError("value of non-constant")
        return self.data


TRUE = Term("const", (), True, BOOL)
FALSE = Term("const", (), False, BOOL)
ZERO = Term("const", (), Fraction(0), REAL)


def var(name: str, sort: str = REAL) -> Term:
    if sort not in (REAL, BOOL):
        raise TermError(f"bad sort {sort!r}")
    return Term("var", (), name, sort)


def rcon(value) -> Term:
    """Real constant from anything Fraction() accepts (int, str, Fraction)."""
    if isinstance(value, bool):
        raise TermError("rcon of bool")
    if isinstance(value, float):
        raise TermError("no floating point in the core")
    return Term("const", (), Fraction(value), REAL)


def bcon(value: bool) -> Term:
    return TRUE if value else FALSE


def _require(sort: str, *ts: Term) -> None:
    for t in ts:
        if t.sort != sort:
            raise TermError(f"expected {sort} term, got {t.sort}: {t!r}")


def add(*terms: Term) -> Term:
    _require(REAL, *terms)
    children = []
    const = Fraction(0)
    for t in terms:
        parts = t.args if t.kind == "add" else (t,)
        for p in parts:
            if p.kind == "const":
                const += p.data
            else:
                children.append(p)
    if const != 0 or not children:
        children.append(rcon(const))
    if len(children) == 1:
        return children[0]
    children.sort(key=Term.key)
    return Term("add", tuple(children), None, REAL)


def scale(coef, t: Term) -> Term:
    _require(REAL, t)
    c = coef if isinstance(coef, Fraction) else Fraction(coef)
    if t.kind == "const":
        return rcon(c * t.data)
    if c == 0:
        return ZERO
    if t.kind == "scale":
        c = c * t.data
        t = t.args[0]
        if c == 0:
            return ZERO
    if c == 1:
        return t
    return Term("scale", (t,), c, REAL)


def neg(t: Term) -> Term:
    return scale(-1, t)


def sub(a: Term, b: Term) -> Term:
    return add(a, scale(-1, b))


def mul(a: Term, b: Term) -> Term:
    """Concrete multiplication. Constant factors collapse into scale, so a
    surviving mul node always has two non-constant children."""
    _require(REAL, a, b)
    if a.kind == "const":
        return scale(a.data, b)
    if b.kind == "const":
        return scale(b.data, a)
    if b.key() < a.key():
        a, b = b, a
    return Term("mul", (a, b), None, REAL)


def fmul(a: Term, b: Term) -> Term:
    """Uninterpreted multiplication stand-in; arguments stored in canonical
    order (min first under the term order)."""
    _require(REAL, a, b)
    if b.key() < a.key():
        a, b = b, a
    return Term("fmul", (a, b), None, REAL)


def ite(c: Term, a: Term, b: Term) -> Term:
    _require(BOOL, c)
    _require(REAL, a, b)
    if c.kind == "const":
        return a if c.data else b
    return Term("ite", (c, a, b), None, REAL)


def abs_term(t: Term) -> Term:
    """abs(t) as ite(t < 0, -t, t)."""
    return ite(lt(t, ZERO), neg(t), t)


def _cmp(kind: str, a: Term, b: Term, op) -> Term:
    _require(REAL, a, b)
    if a.kind == "const" and b.kind == "const":
        return bcon(op(a.data, b.data))
    return Term(kind, (a, b), None, BOOL)


def le(a: Term, b: Term) -> Term:
    return _cmp("le", a, b, lambda x, y: x <= y)


def lt(a: Term, b: Term) -> Term:
    return _cmp("lt", a, b, lambda x, y: x < y)


def ge(a: Term, b: Term) -> Term:
    return le(b, a)


def gt(a: Term, b: Term) -> Term:
    return lt(b, a)


def eq(a: Term, b: Term) -> Term:
    if a.sort == BOOL and b.sort == BOOL:
        return iff(a, b)
    if a.kind == "const" and b.kind == "const":
        return bcon(a.data == b.data)
    _require(REAL, a, b)
    if b.key() < a.key():
        a, b = b, a
    return Term("eq", (a, b), None, BOOL)


def not_(t: Term) -> Term:
    _require(BOOL, t)
    if t.kind == "const":
        return bcon(not t.data)
    if t.kind == "not":
        return t.args[0]
    return Term("not", (t,), None, BOOL)


def _nary_bool(kind: str, terms, unit: Term, zero: Term) -> Term:
    flat = []
    seen = set()
    for t in terms:
        _require(BOOL, t)
        parts = t.args if t.kind == kind else (t,)
        for p in parts:
            if p.kind == "const":
                if p is zero or p.data == zero.data:
                    return zero
                continue
            if p not in seen:
                seen.add(p)
                flat.append(p)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    flat.sort(key=Term.key)
    return Term(kind, tuple(flat), None, BOOL)


def and_(*terms: Term) -> Term:
    return _nary_bool("and", terms, TRUE, FALSE)


def or_(*terms: Term) -> Term:
    return _nary_bool("or", terms, FALSE, TRUE)


def implies(a: Term, b: Term) -> Term:
    _require(BOOL, a, b)
    if a.kind == "const":
        return b if a.data else TRUE
    if b.kind == "const":
        return TRUE if b.data else not_(a)
    return Term("implies", (a, b), None, BOOL)


def iff(a: Term, b: Term) -> Term:
    _require(BOOL, a, b)
    if a.kind == "const":
        return b if a.data else not_(b)
    if b.kind == "const":
        return a if b.data else not_(a)
    if a == b:
        return TRUE
    if b.key() < a.key():
        a, b = b, a
    return Term("iff", (a, b), None, BOOL)


# ---------------------------------------------------------------------------
# traversals


def subterms(t: Term):
    """All distinct subterms, first-visit (pre-order) order."""
    seen = {}
    stack = [t]
    order = []
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen[s] = True
        order.append(s)
        stack.extend(reversed(s.args))
    return order


def vars_of(t: Term) -> list[Term]:
    return [s for s in subterms(t) if s.kind == "var"]


def var_names(t: Term) -> set[str]:
    return {s.data for s in subterms(t) if s.kind == "var"}


def atoms_of(t: Term) -> list[Term]:
    """Leaves of the boolean skeleton (comparisons and Bool variables),
    deduped, in deterministic first-visit order. Does not descend into
    arithmetic (atoms buried in ite conditions are theory-internal)."""
    out = []
    seen = set()

    def walk(s: Term) -> None:
        if s in seen:
            return
        seen.add(s)
        if s.kind in ("not", "and", "or", "implies", "iff"):
            for a in s.args:
                walk(a)
        elif s.kind in ("le", "lt", "eq") or (s.kind == "var" and s.sort == BOOL):
            out.append(s)

    walk(t)
    return out


def fmuls_of(t: Term) -> list[Term]:
    """All fmul application subterms, deduped, deterministic order."""
    return [s for s in subterms(t) if s.kind == "fmul"]


def muls_of(t: Term) -> list[Term]:
    return [s for s in subterms(t) if s.kind == "mul"]


# ---------------------------------------------------------------------------
# substitution


def substitute(t: Term, mapping: Mapping[Term, Term]) -> Term:
    """Simultaneous substitution of variables by terms. Keys are variable
    terms; sort-preserving or TermError. Canonical form (fmul argument
    order, folding) is re-established on the way up."""
    norm = {}
    for k, v in mapping.items():
        if k.kind != "var":
            raise TermError(f"substitution key must be a variable: {k!r}")
        if k.sort != v.sort:
            raise TermError(f"sort mismatch substituting {k!r} by {v!r}")
        norm[k.data] = v
    if not norm:
        # identity still re-canonicalizes (constructors already did), so
        # return as-is
        return t
    cache: dict[Term, Term] = {}

    def go(s: Term) -> Term:
        r = cache.get(s)
        if r is not None:
            return r
        if s.kind == "var":
            r = norm.get(s.data, s)
        elif s.kind == "const":
            r = s
        else:
            args = tuple(go(a) for a in s.args)
            r = _rebuild(s, args)
        cache[s] = r
        return r

    return go(t)


def _rebuild(s: Term, args: tuple) -> Term:
    k = s.kind
    if args == s.args:
        return s
    if k == "add":
        return add(*args)
    if k == "scale":
        return scale(s.data, args[0])
    if k == "mul":
        return mul(*args)
    if k == "fmul":
        return fmul(*args)
    if k == "ite":
        return ite(*args)
    if k == "le":
        return le(*args)
    if k == "lt":
        return lt(*args)
    if k == "eq":
        return eq(*args)
    if k == "not":
        return not_(args[0])
    if k == "and":
        return and_(*args)
    if k == "or":
        return or_(*args)
    if k == "implies":
        return implies(*args)
    if k == "iff":
        return iff(*args)
    raise TermError(f"cannot rebuild {k}")


def map_terms(t: Term, fn) -> Term:
    """Bottom-up rewrite: fn(term-with-rewritten-children) -> term."""
    cache: dict[Term, Term] = {}

    def go(s: Term) -> Term:
        r = cache.get(s)
        if r is not None:
            return r
        if s.args:
            args = tuple(go(a) for a in s.args)
            s2 = _rebuild(s, args) if args != s.args else s
        else:
            s2 = s
        r = fn(s2)
        cache[s] = r
        return r

    return go(t)


# ---------------------------------------------------------------------------
# timing (unrolling indices)

TIME_SEP = "@"
NEXT_SUFFIX = "@next"


def prime(x: Term) -> Term:
    """Next-state version of a state variable."""
    return var(x.data + NEXT_SUFFIX, x.sort)


def is_primed(x: Term) -> bool:
    return x.kind == "var" and x.data.endswith(NEXT_SUFFIX)


def unprime(x: Term) -> Term:
    if not is_primed(x):
        raise TermError(f"not a primed variable: {x!r}")
    return var(x.data[: -len(NEXT_SUFFIX)], x.sort)


def timed(x: Term, i: int) -> Term:
    return var(f"{x.data}{TIME_SEP}{i}", x.sort)


def split_timed(name: str) -> Optional[tuple[str, int]]:
    base, sep, idx = name.rpartition(TIME_SEP)
    if sep and idx.isdigit():
        return base, int(idx)
    return None


def at_time(f: Term, i: int) -> Term:
    """Map every x to x@i and every x@next to x@(i+1)."""
    mapping = {}
    for v in vars_of(f):
        if is_primed(v):
            mapping[v] = timed(unprime(v), i + 1)
        else:
            if split_timed(v.data) is not None:
                raise TermError(f"variable already timed: {v!r}")
            mapping[v] = timed(v, i)
    return substitute(f, mapping)


def untime(f: Term, i: int) -> Term:
    """Inverse of at_time(·, i); rejects formulas spanning indices other
    than {i, i+1}."""
    mapping = {}
    for v in vars_of(f):
        st = split_timed(v.data)
        if st is None:
            raise TermError(f"untimed variable in untime: {v!r}")
        base, j = st
        if j == i:
            mapping[v] = var(base, v.sort)
        elif j == i + 1:
            mapping[v] = prime(var(base, v.sort))
        else:
            raise TermError(
                f"untime({i}): formula mentions frame {j} (variable {v.data})"
            )
    return substitute(f, mapping)


def frame_indices(f: Term) -> set[int]:
    """Unrolling indices mentioned by a formula over timed variables."""
    out = set()
    for v in vars_of(f):
        st = split_timed(v.data)
        if st is None:
            raise TermError(f"untimed variable: {v!r}")
        out.add(st[1])
    return out


# ---------------------------------------------------------------------------
# models and evaluation


class Model:
    """Exact rational/boolean assignment to variables and fmul terms.

    fmul lookups are syntactic (by canonical term); evaluation never
    multiplies fmul arguments out.
    """

    __slots__ = ("vars", "fmuls")

    def __init__(self, vars: Mapping[str, Value] | None = None,
                 fmuls: Mapping[Term, Fraction] | None = None):
        self.vars: dict[str, Value] = dict(vars or {})
        self.fmuls: dict[Term, Fraction] = dict(fmuls or {})

    def copy(self) -> "Model":
        return Model(self.vars, self.fmuls)

    def extended_with_products(self, terms: Iterable[Term]) -> "Model":
        """Assign each missing fmul term the exact product of its argument
        values (the intended semantics); existing entries win."""
        m = self.copy()
        for t in terms:
            for s in fmuls_of(t):
                if s not in m.fmuls:
                    a = evaluate(s.args[0], m)
                    b = evaluate(s.args[1], m)
                    m.fmuls[s] = a * b
        return m

    def __repr__(self):
        vs = ", ".join(f"{k}={v}" for k, v in sorted(self.vars.items()))
        fs = ", ".join(f"{t!r}={v}" for t, v in self.fmuls.items())
        return f"Model({vs}{'; ' if fs else ''}{fs})"

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return self.vars == other.vars and self.fmuls == other.fmuls

    def __hash__(self):
        return hash((tuple(sorted(self.vars.items())),
                     tuple(sorted(self.fmuls.items(), key=lambda kv: kv[0].key()))))


def evaluate(t: Term, m: Model) -> Value:
    """Exact evaluation; fmul values come from the model, never from
    multiplying arguments."""
    cache: dict[Term, Value] = {}

    def go(s: Term) -> Value:
        r = cache.get(s)
        if r is not None or s in cache:
            return r
        k = s.kind
        if k == "const":
            r = s.data
        elif k == "var":
            try:
                r = m.vars[s.data]
            except KeyError:
                raise UnassignedSymbolError(s.data) from None
        elif k == "fmul":
            try:
                r = m.fmuls[s]
            except KeyError:
                from . import smt2

                raise UnassignedSymbolError(smt2.serialize_term(s)) from None
        elif k == "add":
            r = sum(go(a) for a in s.args)
        elif k == "scale":
            r = s.data * go(s.args[0])
        elif k == "mul":
            r = go(s.args[0]) * go(s.args[1])
        elif k == "ite":
            r = go(s.args[1]) if go(s.args[0]) else go(s.args[2])
        elif k == "le":
            r = go(s.args[0]) <= go(s.args[1])
        elif k == "lt":
            r = go(s.args[0]) < go(s.args[1])
        elif k == "eq":
            r = go(s.args[0]) == go(s.args[1])
        elif k == "not":
            r = not go(s.args[0])
        elif k == "and":
            r = all(go(a) for a in s.args)
        elif k == "or":
            r = any(go(a) for a in s.args)
        elif k == "implies":
            r = (not go(s.args[0])) or go(s.args[1])
        elif k == "iff":
            r = go(s.args[0]) == go(s.args[1])
        else:
            raise TermError(f"cannot evaluate {k}")
        cache[s] = r
        return r

    return go(t)
