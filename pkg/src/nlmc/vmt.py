"""VMT transition-system format: parsing and serialization.

A VMT file is an SMT-LIB2 script where define-fun annotations mark the
system structure: ``(! x :next xn)`` pairs a current-state variable with
its next-state variable, ``(! e :init true)`` / ``(! e :trans true)``
give the initial-state and transition formulas, and
``(! e :invar-property <idx>)`` attaches invariant properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import smt2, terms
from .smt2 import ParseError, Symbol
from .terms import BOOL, REAL, Term


@dataclass
class TransitionSystem:
    """⟨X, I, T⟩ plus invariant properties over X.

    X is the ordered list of current-state variables; next-state variables
    are their primed forms (terms.prime). I is over X, T over X ∪ X',
    each property over X.
    """

    variables: list[Term]
    init: Term
    trans: Term
    properties: list[Term] = field(default_factory=list)

    def __post_init__(self):
        names = {v.data for v in self.variables}
        primed = {terms.prime(v).data for v in self.variables}
        for v in terms.vars_of(self.init):
            if v.data not in names:
                raise ValueError(f"init mentions non-state variable {v.data}")
        for v in terms.vars_of(self.trans):
            if v.data not in names and v.data not in primed:
                raise ValueError(f"trans mentions unknown variable {v.data}")
        for p in self.properties:
            for v in terms.vars_of(p):
                if v.data not in names:
                    raise ValueError(f"property mentions non-state variable {v.data}")

    def prime_map(self) -> dict[Term, Term]:
        return {v: terms.prime(v) for v in self.variables}


def parse_vmt(text: str) -> TransitionSystem:
    """Parse the documented VMT subset; deterministic and total on it."""
    try:
        script = smt2.read_sexprs(text)
    except ParseError:
        raise
    reader = smt2.FormulaReader()
    declared: dict[str, str] = {}  # name -> sort
    next_of: dict[str, str] = {}  # current name -> next name
    order: list[str] = []  # current-state names in declaration order
    decl_order: list[str] = []
    init = None
    trans = None
    props: dict[int, Term] = {}

    def sort_of(sx) -> str:
        s = str(sx) if isinstance(sx, Symbol) else None
        if s == "Real":
            return REAL
        if s == "Bool":
            return BOOL
        raise ParseError(f"unsupported sort {sx!r} (only Real and Bool)", *smt2._loc(sx))

    for cmd in script:
        if not (isinstance(cmd, list) and cmd and isinstance(cmd[0], Symbol)):
            raise ParseError(f"bad command {cmd!r}")
        head = str(cmd[0])
        if head in ("set-logic", "set-info", "set-option"):
            continue
        if head == "declare-fun":
            if len(cmd) != 4 or not isinstance(cmd[1], Symbol):
                raise ParseError("malformed declare-fun", *smt2._loc(cmd))
            if str(cmd[1]) == "fmul" and cmd[2] == ["Real", "Real"]:
                continue  # the single global fmul declaration
            if cmd[2] != []:
                raise ParseError("only 0-ary declare-fun supported", *smt2._loc(cmd))
            name = str(cmd[1])
            if terms.TIME_SEP in name:
                raise ParseError(f"'@' is reserved in variable names: {name}",
                                 *smt2._loc(cmd))
            declared[name] = sort_of(cmd[3])
            decl_order.append(name)
            reader.declare(name, declared[name])
            continue
        if head == "declare-const":
            if len(cmd) != 3 or not isinstance(cmd[1], Symbol):
                raise ParseError("malformed declare-const", *smt2._loc(cmd))
            name = str(cmd[1])
            if terms.TIME_SEP in name:
                raise ParseError(f"'@' is reserved in variable names: {name}",
                                 *smt2._loc(cmd))
            declared[name] = sort_of(cmd[2])
            decl_order.append(name)
            reader.declare(name, declared[name])
            continue
        if head == "define-fun":
            if len(cmd) != 5 or not isinstance(cmd[1], Symbol):
                raise ParseError("malformed define-fun", *smt2._loc(cmd))
            if cmd[2] != []:
                raise ParseError("parametric define-fun not supported", *smt2._loc(cmd))
            name = str(cmd[1])
            body_sx = cmd[4]
            # annotated body?
            if (isinstance(body_sx, list) and body_sx and body_sx[0] == "!"):
                expr_sx = body_sx[1]
                attrs = body_sx[2:]
                expr = reader.parse(expr_sx)
                i = 0
                annotated = False
                while i < len(attrs):
                    key = str(attrs[i])
                    if key == ":next":
                        if i + 1 >= len(attrs) or not isinstance(attrs[i + 1], Symbol):
                            raise ParseError("malformed :next", *smt2._loc(body_sx))
                        nxt = str(attrs[i + 1])
                        if expr.kind != "var":
                            raise ParseError(":next on a non-variable", *smt2._loc(body_sx))
                        if nxt not in declared:
                            raise ParseError(f":next names undeclared symbol {nxt}",
                                             *smt2._loc(body_sx))
                        if declared[nxt] != expr.sort:
                            raise ParseError(f":next sort mismatch for {expr.data}/{nxt}",
                                             *smt2._loc(body_sx))
                        if expr.data in next_of:
                            raise ParseError(f"duplicate :next for {expr.data}",
                                             *smt2._loc(body_sx))
                        next_of[expr.data] = nxt
                        order.append(expr.data)
                        i += 2
                        annotated = True
                    elif key == ":init":
                        if init is not None:
                            raise ParseError("duplicate :init", *smt2._loc(body_sx))
                        init = expr
                        i += 2
                        annotated = True
                    elif key == ":trans":
                        if trans is not None:
                            raise ParseError("duplicate :trans", *smt2._loc(body_sx))
                        trans = expr
                        i += 2
                        annotated = True
                    elif key == ":invar-property":
                        idx = int(str(attrs[i + 1]))
                        if idx in props:
                            raise ParseError(f"property index collision: {idx}",
                                             *smt2._loc(body_sx))
                        props[idx] = expr
                        i += 2
                        annotated = True
                    elif key == ":live-property":
                        raise ParseError(":live-property not supported (invariant "
                                         "properties only)", *smt2._loc(body_sx))
                    else:
                        i += 2  # unknown annotation: skip key/value
                if not annotated:
                    reader.define(name, expr)
                else:
                    reader.define(name, expr)
            else:
                reader.define(name, reader.parse(body_sx))
            continue
        if head == "assert":
            raise ParseError("top-level assert not allowed in VMT input",
                             *smt2._loc(cmd))
        if head in ("check-sat", "exit"):
            continue
        raise ParseError(f"unsupported command {head!r}", *smt2._loc(cmd))

    if trans is None:
        raise ParseError("no transition relation (:trans missing)")
    if init is None:
        raise ParseError("no initial-state formula (:init missing)")

    paired = set(order) | set(next_of.values())
    unpaired = [n for n in decl_order if n not in paired]
    if unpaired:
        raise ParseError(f"declared symbols not paired by :next: {', '.join(unpaired)}")

    xs = [terms.var(n, declared[n]) for n in decl_order if n in next_of]
    # rename user next-state names to the canonical primed form
    ren = {}
    for n in order:
        ren[terms.var(next_of[n], declared[n])] = terms.prime(terms.var(n, declared[n]))
    trans = terms.substitute(trans, ren)
    plist = [props[i] for i in sorted(props)]
    try:
        return TransitionSystem(xs, init, trans, plist)
    except ValueError as e:
        raise ParseError(str(e)) from None


def serialize_vmt(ts: TransitionSystem, logic: str = "QF_NRA") -> str:
    """Emit a .vmt script that parse_vmt reads back (up to canonical form).
    Internal primed names are rewritten to fresh `.next`-suffixed symbols
    (`@` is reserved for generated names and rejected by the parser)."""
    out = [f"(set-logic {logic})"]
    uses_fmul = bool(terms.fmuls_of(ts.init) or terms.fmuls_of(ts.trans)
                     or any(terms.fmuls_of(p) for p in ts.properties))
    if uses_fmul:
        out.append("(declare-fun fmul (Real Real) Real)")
    taken = {v.data for v in ts.variables}
    next_names: dict[str, str] = {}
    for v in ts.variables:
        cand = v.data + ".next"
        while cand in taken:
            cand += "!"
        taken.add(cand)
        next_names[v.data] = cand
    ren = {terms.prime(v): terms.var(next_names[v.data], v.sort)
           for v in ts.variables}
    trans = terms.substitute(ts.trans, ren)
    for v in ts.variables:
        out.append(f"(declare-fun {smt2.serialize_symbol(v.data)} () {v.sort})")
        out.append(
            f"(declare-fun {smt2.serialize_symbol(next_names[v.data])} () {v.sort})")
    for i, v in enumerate(ts.variables):
        out.append(
            f"(define-fun .sv{i} () {v.sort} "
            f"(! {smt2.serialize_symbol(v.data)} "
            f":next {smt2.serialize_symbol(next_names[v.data])}))"
        )
    out.append(f"(define-fun .init () Bool (! {smt2.serialize_term(ts.init)} :init true))")
    out.append(f"(define-fun .trans () Bool (! {smt2.serialize_term(trans)} :trans true))")
    for i, p in enumerate(ts.properties):
        out.append(
            f"(define-fun .p{i} () Bool (! {smt2.serialize_term(p)} :invar-property {i}))"
        )
    return "\n".join(out) + "\n"


def parse_smt2_assertions(text: str) -> Term:
    """Read a plain .smt2 script (declare-fun/define-fun/assert) and return
    the conjunction of its assertions."""
    reader = smt2.FormulaReader()
    conj = []
    for cmd in smt2.read_sexprs(text):
        if not (isinstance(cmd, list) and cmd and isinstance(cmd[0], Symbol)):
            raise ParseError(f"bad command {cmd!r}")
        head = str(cmd[0])
        if head in ("set-logic", "set-info", "set-option", "check-sat", "exit",
                    "get-model", "get-value"):
            continue
        if head == "declare-fun":
            if len(cmd) == 4 and cmd[2] == []:
                s = str(cmd[3])
                reader.declare(str(cmd[1]), REAL if s == "Real" else BOOL)
                continue
            if len(cmd) == 4 and str(cmd[1]) == "fmul":
                continue  # the global fmul declaration
            raise ParseError("only 0-ary declare-fun supported", *smt2._loc(cmd))
        if head == "declare-const" and len(cmd) == 3:
            s = str(cmd[2])
            reader.declare(str(cmd[1]), REAL if s == "Real" else BOOL)
            continue
        if head == "define-fun" and len(cmd) == 5 and cmd[2] == []:
            reader.define(str(cmd[1]), reader.parse(cmd[4]))
            continue
        if head == "assert" and len(cmd) == 2:
            conj.append(reader.parse(cmd[1]))
            continue
        raise ParseError(f"unsupported command {head!r}", *smt2._loc(cmd))
    return terms.and_(*conj)
