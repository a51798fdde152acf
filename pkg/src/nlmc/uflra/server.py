"""SMT-LIB2 front end for the builtin QF_UFLRA solver.

Run as ``python -m nlmc.uflra.server``; reads commands from stdin, one
s-expression at a time, and answers on stdout.  Supported commands:
set-option, set-logic, set-info, declare-fun (0-ary Real/Bool and the
single binary ``fmul``), declare-const, define-fun (0-ary macros),
assert (with ``(! e :named lbl)``), push, pop, check-sat, get-value,
get-unsat-core, get-model, reset, echo, exit.

The solver state is fully incremental: push/pop are realized as selector
assumptions, so nothing learned is ever thrown away.
"""

from __future__ import annotations

import sys
from fractions import Fraction

from .. import smt2, terms
from ..smt2 import ParseError, Symbol
from ..terms import BOOL, REAL, Term
from .theory import IncrementalUflra


def _sexp_str(sx) -> str:
    if isinstance(sx, Symbol):
        return str(sx)
    if isinstance(sx, list):
        return "(" + " ".join(_sexp_str(a) for a in sx) + ")"
    return str(sx)


class _Frame:
    def __init__(self, selector):
        self.selector = selector  # None for the base frame
        self.declared: list[str] = []
        self.defined: list[str] = []
        self.labels: dict[str, int] = {}  # label -> selector var


class Server:
    def __init__(self, out=None):
        self.out = out or sys.stdout
        self.reset()

    def reset(self) -> None:
        self.reader = smt2.FormulaReader()
        self.inc = IncrementalUflra()
        self.frames = [_Frame(None)]
        self.sel_label: dict[int, str] = {}
        self.sorts: dict[str, str] = {}
        self.status: str | None = None
        self.core: list[str] = []
        self.model_vars: dict[str, object] = {}
        self.model_apps: dict[Term, Fraction] = {}

    # -- plumbing ------------------------------------------------------------

    def _reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def _error(self, msg: str) -> None:
        msg = msg.replace('"', "'")
        self._reply(f'(error "{msg}")')

    def _live_labels(self) -> set[str]:
        out = set()
        for fr in self.frames:
            out.update(fr.labels)
        return out

    # -- commands --------------------------------------------------------------

    def handle(self, cmd) -> bool:
        """Returns False when the session should end."""
        if not (isinstance(cmd, list) and cmd and isinstance(cmd[0], Symbol)):
            self._error(f"bad command {_sexp_str(cmd)}")
            return True
        head = str(cmd[0])
        try:
            return self._dispatch(head, cmd)
        except ParseError as e:
            self._error(str(e))
        except terms.TermError as e:
            self._error(str(e))
        except (ValueError, RuntimeError) as e:
            self._error(f"internal: {e}")
        except RecursionError:
            self._error("formula too deep")
        return True

    def _dispatch(self, head: str, cmd) -> bool:
        if head in ("set-option", "set-info", "set-logic"):
            return True
        if head == "echo":
            self._reply(_sexp_str(cmd[1]) if len(cmd) > 1 else "")
            return True
        if head == "exit":
            return False
        if head == "reset":
            self.reset()
            return True
        if head == "declare-fun":
            if len(cmd) != 4:
                self._error("malformed declare-fun")
                return True
            name = str(cmd[1])
            if cmd[2] == ["Real", "Real"] and name == "fmul":
                return True  # builtin
            if cmd[2] != []:
                self._error("only 0-ary declarations (and fmul) are supported")
                return True
            self._declare(name, str(cmd[3]))
            return True
        if head == "declare-const":
            if len(cmd) != 3:
                self._error("malformed declare-const")
                return True
            self._declare(str(cmd[1]), str(cmd[2]))
            return True
        if head == "define-fun":
            if len(cmd) != 5 or cmd[2] != []:
                self._error("only 0-ary define-fun is supported")
                return True
            body = self.reader.parse(cmd[4])
            self.reader.define(str(cmd[1]), body)
            self.frames[-1].defined.append(str(cmd[1]))
            return True
        if head == "assert":
            if len(cmd) != 2:
                self._error("malformed assert")
                return True
            label = None
            body = cmd[1]
            if isinstance(body, list) and body and body[0] == "!":
                attrs = body[2:]
                for i in range(0, len(attrs) - 1, 2):
                    if str(attrs[i]) == ":named":
                        label = str(attrs[i + 1])
                body = body[1]
            if label is not None and label in self._live_labels():
                self._error(f"duplicate assertion label {label}")
                return True
            f = self.reader.parse(body)
            if f.sort != BOOL:
                self._error("assert expects a Bool term")
                return True
            fr = self.frames[-1]
            if label is not None:
                sel = self.inc.new_selector()
                fr.labels[label] = sel
                self.sel_label[sel] = label
                self.inc.assert_term(f, selector=sel)
            else:
                self.inc.assert_term(f, selector=fr.selector)
            self.status = None
            return True
        if head == "push":
            n = int(str(cmd[1])) if len(cmd) > 1 else 1
            for _ in range(n):
                self.frames.append(_Frame(self.inc.new_selector()))
            return True
        if head == "pop":
            n = int(str(cmd[1])) if len(cmd) > 1 else 1
            for _ in range(n):
                if len(self.frames) == 1:
                    self._error("pop on empty stack")
                    return True
                fr = self.frames.pop()
                for name in fr.declared:
                    self.reader.env.pop(name, None)
                    self.sorts.pop(name, None)
                for name in fr.defined:
                    self.reader.env.pop(name, None)
            self.status = None
            return True
        if head == "check-sat":
            self._check_sat()
            return True
        if head == "get-value":
            self._get_value(cmd)
            return True
        if head == "get-unsat-core":
            if self.status != "unsat":
                self._error("no unsat result available")
                return True
            self._reply("(" + " ".join(self.core) + ")")
            return True
        if head == "get-model":
            self._get_model()
            return True
        self._error(f"unsupported command {head}")
        return True

    def _declare(self, name: str, sort: str) -> None:
        if sort not in ("Real", "Bool"):
            self._error(f"unsupported sort {sort}")
            return
        self.reader.declare(name, REAL if sort == "Real" else BOOL)
        self.sorts[name] = sort
        self.frames[-1].declared.append(name)

    def _check_sat(self) -> None:
        assumptions = []
        for fr in self.frames:
            if fr.selector is not None:
                assumptions.append(fr.selector)
            assumptions.extend(fr.labels.values())
        try:
            r = self.inc.solve(assumptions)
        except (ValueError, RuntimeError) as e:
            self.status = None
            self._reply("unknown")
            self._error(f"internal: {e}")
            return
        self.status = r.status
        if r.status == "sat":
            self.model_vars, self.model_apps = r.model
            self._reply("sat")
        else:
            self.core = [self.sel_label[s] for s in r.core if s in self.sel_label]
            self._reply("unsat")

    def _value_str(self, v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        return smt2.serialize_fraction(v)

    def _eval_term(self, t: Term):
        model = terms.Model(dict(self.model_vars), dict(self.model_apps))
        try:
            return terms.evaluate(t, model)
        except terms.UnassignedSymbolError:
            pass
        # default-complete: unknown vars are 0/false; unknown applications
        # follow the value table of known ones, else 0
        full = terms.Model(dict(model.vars), dict(model.fmuls))
        for v in terms.vars_of(t):
            if v.data not in full.vars:
                full.vars[v.data] = Fraction(0) if v.sort == REAL else False
        table = {}
        for app, val in self.model_apps.items():
            try:
                key = (terms.evaluate(app.args[0], full),
                       terms.evaluate(app.args[1], full))
                table[key] = val
            except terms.UnassignedSymbolError:
                continue
        for app in terms.fmuls_of(t):
            if app not in full.fmuls:
                key = (terms.evaluate(app.args[0], full),
                       terms.evaluate(app.args[1], full))
                full.fmuls[app] = table.get(key, Fraction(0))
        return terms.evaluate(t, full)

    def _get_value(self, cmd) -> None:
        if self.status != "sat":
            self._error("no model available")
            return
        if len(cmd) != 2 or not isinstance(cmd[1], list):
            self._error("malformed get-value")
            return
        pairs = []
        for sx in cmd[1]:
            t = self.reader.parse(sx)
            v = self._eval_term(t)
            pairs.append(f"({_sexp_str(sx)} {self._value_str(v)})")
        self._reply("(" + " ".join(pairs) + ")")

    def _get_model(self) -> None:
        if self.status != "sat":
            self._error("no model available")
            return
        lines = ["("]
        for name, sort in self.sorts.items():
            v = self.model_vars.get(name, Fraction(0) if sort == "Real" else False)
            lines.append(
                f"  (define-fun {smt2.serialize_symbol(name)} () {sort} "
                f"{self._value_str(v)})")
        lines.append(")")
        self._reply("\n".join(lines))


def _iter_commands(stream):
    """Yield complete top-level s-expressions from a text stream."""
    buf = []
    depth = 0
    in_quote = False
    while True:
        line = stream.readline()
        if not line:
            break
        i = 0
        while i < len(line):
            c = line[i]
            if c == "|":
                in_quote = not in_quote
            elif c == ";" and not in_quote:
                line = line[:i] + "\n"
                break
            elif not in_quote:
                if c == "(":
                    depth += 1
                elif c == ")":
                    depth -= 1
            i += 1
        buf.append(line)
        if depth <= 0 and any(ch not in " \t\r\n" for ch in "".join(buf)):
            text = "".join(buf)
            buf = []
            depth = 0
            try:
                for sx in smt2.read_sexprs(text):
                    yield sx
            except ParseError as e:
                yield ("__parse_error__", str(e))


def main(argv=None) -> int:
    server = Server(sys.stdout)
    for cmd in _iter_commands(sys.stdin):
        if isinstance(cmd, tuple) and cmd and cmd[0] == "__parse_error__":
            server._error(cmd[1])
            continue
        if not server.handle(cmd):
            return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
