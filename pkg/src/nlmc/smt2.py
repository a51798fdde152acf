"""SMT-LIB2 s-expression reading, formula parsing and serialization.

Covers the quantifier-free Real/Bool subset used by the checker:
declare-fun (0-ary), non-recursive 0-ary define-fun (inlined), let
(inlined), and the operators and or not => = distinct ite <= < >= > + -
* / abs, plus `fmul` as the one uninterpreted binary Real function.
Rationals serialize as `(/ p q)`, negatives as `(- p)`.
"""

from __future__ import annotations

from fractions import Fraction

from . import terms
from .terms import BOOL, REAL, Term


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        if line:
            msg = f"{msg} (line {line}, column {col})"
        super().__init__(msg)
        self.line = line
        self.col = col


class Symbol(str):
    """Distinguishes symbols from string literals in sexp trees."""

    __slots__ = ("line", "col")


def _sym(s: str, line: int = 0, col: int = 0) -> Symbol:
    y = Symbol(s)
    y.line = line
    y.col = col
    return y


_SIMPLE_SYMBOL_EXTRA = set("~!@$%^&*_-+=<>.?/")


def tokenize(text: str):
    """Yields (token, line, col); tokens are '(', ')', Symbol, or str
    payloads of |quoted| symbols (returned as Symbol too)."""
    i, n = 0, len(text)
    line, col = 1, 1
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c, line, col
            i += 1
            col += 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated |symbol|", line, col)
            yield _sym(text[i + 1 : j], line, col), line, col
            delta = j + 1 - i
            i = j + 1
            col += delta
        else:
            j = i
            while j < n and (text[j].isalnum() or text[j] in _SIMPLE_SYMBOL_EXTRA or text[j] == ":"):
                j += 1
            if j == i:
                raise ParseError(f"unexpected character {c!r}", line, col)
            yield _sym(text[i:j], line, col), line, col
            col += j - i
            i = j


def read_sexprs(text: str) -> list:
    """Parse text into a list of nested lists/Symbols."""
    out = []
    stack = [out]
    for tok, line, col in tokenize(text):
        if tok == "(":
            new: list = []
            stack[-1].append(new)
            stack.append(new)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            stack.pop()
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ParseError("unbalanced '('", 0, 0)
    return out


def _loc(sx):
    if isinstance(sx, Symbol):
        return getattr(sx, "line", 0), getattr(sx, "col", 0)
    for a in sx if isinstance(sx, list) else ():
        l, c = _loc(a)
        if l:
            return l, c
    return 0, 0


def parse_numeral(sx) -> Fraction | None:
    """Exact rational from <numeral>, <decimal>, (- n) or (/ p q) trees."""
    if isinstance(sx, Symbol):
        s = str(sx)
        try:
            if "." in s:
                return Fraction(s)  # decimal literal, exact
            if s.lstrip("-").isdigit() and s not in ("-", ""):
                return Fraction(int(s))
        except ValueError:
            return None
        return None
    if isinstance(sx, list) and len(sx) == 2 and sx[0] == "-":
        v = parse_numeral(sx[1])
        return -v if v is not None else None
    if isinstance(sx, list) and len(sx) == 3 and sx[0] == "/":
        p = parse_numeral(sx[1])
        q = parse_numeral(sx[2])
        if p is not None and q is not None and q != 0:
            return p / q
        return None
    return None


class FormulaReader:
    """Turns sexp trees into Terms given a symbol environment."""

    def __init__(self, env: dict[str, Term] | None = None):
        # env maps declared 0-ary symbols and define-fun macros to terms
        self.env: dict[str, Term] = dict(env or {})

    def declare(self, name: str, sort: str) -> Term:
        t = terms.var(name, sort)
        self.env[name] = t
        return t

    def define(self, name: str, body: Term) -> None:
        self.env[name] = body

    def parse(self, sx, let_env: dict[str, Term] | None = None) -> Term:
        le = let_env or {}
        try:
            return self._parse(sx, le)
        except terms.TermError as e:
            l, c = _loc(sx)
            raise ParseError(str(e), l, c) from None

    def _parse(self, sx, le: dict[str, Term]) -> Term:
        if isinstance(sx, Symbol):
            s = str(sx)
            if s == "true":
                return terms.TRUE
            if s == "false":
                return terms.FALSE
            v = parse_numeral(sx)
            if v is not None:
                return terms.rcon(v)
            if s in le:
                return le[s]
            if s in self.env:
                return self.env[s]
            raise ParseError(f"unknown symbol {s!r}", *_loc(sx))
        if not isinstance(sx, list) or not sx:
            raise ParseError(f"bad expression {sx!r}", *_loc(sx))
        head = sx[0]
        if isinstance(head, Symbol):
            op = str(head)
            args_sx = sx[1:]
            if op == "let":
                if len(sx) != 3:
                    raise ParseError("malformed let", *_loc(sx))
                new_le = dict(le)
                for binding in sx[1]:
                    if not (isinstance(binding, list) and len(binding) == 2
                            and isinstance(binding[0], Symbol)):
                        raise ParseError("malformed let binding", *_loc(sx))
                    new_le[str(binding[0])] = self._parse(binding[1], le)
                return self._parse(sx[2], new_le)
            if op == "!":
                # annotation: keep the annotated term, drop attributes
                return self._parse(sx[1], le)
            v = parse_numeral(sx)
            if v is not None:
                return terms.rcon(v)
            args = [self._parse(a, le) for a in args_sx]
            return self._apply(op, args, sx)
        raise ParseError(f"bad application {sx!r}", *_loc(sx))

    def _apply(self, op: str, args: list[Term], sx) -> Term:
        n = len(args)
        if op == "and":
            return terms.and_(*args)
        if op == "or":
            return terms.or_(*args)
        if op == "not" and n == 1:
            return terms.not_(args[0])
        if op == "=>" and n >= 2:
            out = args[-1]
            for a in reversed(args[:-1]):
                out = terms.implies(a, out)
            return out
        if op == "xor" and n == 2:
            return terms.not_(terms.iff(args[0], args[1]))
        if op == "=" and n >= 2:
            return terms.and_(*[terms.eq(args[i], args[i + 1]) for i in range(n - 1)])
        if op == "distinct" and n >= 2:
            outs = []
            for i in range(n):
                for j in range(i + 1, n):
                    outs.append(terms.not_(terms.eq(args[i], args[j])))
            return terms.and_(*outs)
        if op == "ite" and n == 3:
            if args[1].sort == BOOL:
                c = args[0]
                return terms.and_(terms.implies(c, args[1]),
                                  terms.implies(terms.not_(c), args[2]))
            return terms.ite(*args)
        if op == "<=" and n == 2:
            return terms.le(*args)
        if op == "<" and n == 2:
            return terms.lt(*args)
        if op == ">=" and n == 2:
            return terms.ge(*args)
        if op == ">" and n == 2:
            return terms.gt(*args)
        if op == "+":
            return terms.add(*args)
        if op == "-" and n == 1:
            return terms.neg(args[0])
        if op == "-" and n >= 2:
            out = args[0]
            for a in args[1:]:
                out = terms.sub(out, a)
            return out
        if op == "*" and n >= 2:
            coef = Fraction(1)
            factors = []
            for a in args:
                if a.kind == "const":
                    coef *= a.data
                else:
                    factors.append(a)
            if not factors:
                return terms.rcon(coef)
            out = factors[0]
            for a in factors[1:]:
                out = terms.mul(out, a)
            return terms.scale(coef, out)
        if op == "/" and n == 2:
            if args[1].kind != "const":
                raise ParseError("division by a non-constant term", *_loc(sx))
            if args[1].data == 0:
                raise ParseError("division by zero", *_loc(sx))
            return terms.scale(Fraction(1) / args[1].data, args[0])
        if op == "abs" and n == 1:
            return terms.abs_term(args[0])
        if op == "fmul" and n == 2:
            return terms.fmul(*args)
        raise ParseError(f"unknown operator {op!r} with {n} argument(s)", *_loc(sx))


def parse_formula(text: str, env: dict[str, Term] | None = None) -> Term:
    """Parse a single expression (not a script) into a Term; free symbols
    may be pre-declared via env, otherwise they are inferred as Real
    variables."""
    trees = read_sexprs(text)
    if len(trees) != 1:
        raise ParseError(f"expected one expression, got {len(trees)}")
    reader = FormulaReader(env)
    if env is None:
        _infer_vars(trees[0], reader)
    return reader.parse(trees[0])


_BUILTIN = {
    "and", "or", "not", "=>", "xor", "=", "distinct", "ite", "let", "!",
    "<=", "<", ">=", ">", "+", "-", "*", "/", "abs", "fmul", "true", "false",
}


def _infer_vars(sx, reader: FormulaReader, bool_ctx: bool = True) -> None:
    # Free symbols in comparison/arithmetic position become Real vars; bare
    # symbols in boolean positions become Bool vars. Good enough for tests
    # and the CLI's ad-hoc formula mode; scripts always declare.
    if isinstance(sx, Symbol):
        s = str(sx)
        if s not in _BUILTIN and parse_numeral(sx) is None and s not in reader.env:
            reader.declare(s, BOOL if bool_ctx else REAL)
        return
    if not isinstance(sx, list) or not sx:
        return
    head = str(sx[0]) if isinstance(sx[0], Symbol) else None
    if head == "let":
        for b in sx[1]:
            _infer_vars(b[1], reader, False)
        _infer_vars(sx[2], reader, bool_ctx)
        return
    if head in ("and", "or", "not", "=>", "xor"):
        for a in sx[1:]:
            _infer_vars(a, reader, True)
        return
    if head == "ite":
        _infer_vars(sx[1], reader, True)
        _infer_vars(sx[2], reader, False)
        _infer_vars(sx[3], reader, False)
        return
    for a in sx[1:]:
        _infer_vars(a, reader, False)


# ---------------------------------------------------------------------------
# serialization


def serialize_fraction(v: Fraction) -> str:
    if v.denominator == 1:
        return f"(- {-v.numerator})" if v.numerator < 0 else str(v.numerator)
    if v.numerator < 0:
        return f"(- (/ {-v.numerator} {v.denominator}))"
    return f"(/ {v.numerator} {v.denominator})"


_NEEDS_QUOTE = set("()|; \t\n")


def serialize_symbol(name: str) -> str:
    if not name or any(c in _NEEDS_QUOTE for c in name) or name[0].isdigit():
        return f"|{name}|"
    return name


def serialize_term(t: Term) -> str:
    out: list[str] = []
    _ser(t, out)
    return "".join(out)


def _ser(t: Term, out: list[str]) -> None:
    k = t.kind
    if k == "var":
        out.append(serialize_symbol(t.data))
    elif k == "const":
        if t.sort == BOOL:
            out.append("true" if t.data else "false")
        else:
            out.append(serialize_fraction(t.data))
    elif k == "scale":
        out.append("(* ")
        out.append(serialize_fraction(t.data))
        out.append(" ")
        _ser(t.args[0], out)
        out.append(")")
    elif k == "add":
        out.append("(+")
        for a in t.args:
            out.append(" ")
            _ser(a, out)
        out.append(")")
    elif k in ("mul", "fmul"):
        out.append("(* " if k == "mul" else "(fmul ")
        _ser(t.args[0], out)
        out.append(" ")
        _ser(t.args[1], out)
        out.append(")")
    elif k == "ite":
        out.append("(ite ")
        _ser(t.args[0], out)
        out.append(" ")
        _ser(t.args[1], out)
        out.append(" ")
        _ser(t.args[2], out)
        out.append(")")
    elif k in ("le", "lt", "eq", "implies", "iff"):
        op = {"le": "<=", "lt": "<", "eq": "=", "implies": "=>", "iff": "="}[k]
        out.append(f"({op} ")
        _ser(t.args[0], out)
        out.append(" ")
        _ser(t.args[1], out)
        out.append(")")
    elif k == "not":
        out.append("(not ")
        _ser(t.args[0], out)
        out.append(")")
    elif k in ("and", "or"):
        out.append(f"({k}")
        for a in t.args:
            out.append(" ")
            _ser(a, out)
        out.append(")")
    else:
        raise ValueError(f"cannot serialize {k}")
