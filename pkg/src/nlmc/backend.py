"""Driver for an external SMT-LIB2 solver process (LRA+EUF queries).

One child process per session; textual SMT-LIB2 v2.6 over stdin/stdout
(set-option, set-logic, declare-fun, assert with :named, push, pop,
check-sat, get-value, get-unsat-core).  The default command runs the
bundled solver (``python -m nlmc.uflra.server``); any solver speaking
the same protocol can be substituted.

Per-call timeouts are enforced by wall clock: on expiry the child is
killed and the session is restarted from its base configuration (stack
state is lost; the call reports unknown).
"""

from __future__ import annotations

import os
import select
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import smt2, terms
from .smt2 import ParseError
from .terms import BOOL, REAL, Term

DEFAULT_SOLVER_CMD = (sys.executable, "-m", "nlmc.uflra.server")


class SolverError(Exception):
    pass


@dataclass
class SolverVerdict:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[terms.Model] = None
    core: Optional[list[str]] = None
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


class SolverSession:
    """Single-owner incremental session with one solver child process."""

    def __init__(self, command: Sequence[str] | str = DEFAULT_SOLVER_CMD,
                 logic: str = "QF_UFLRA", timeout: Optional[float] = None):
        if isinstance(command, str):
            command = command.split()
        self.command = list(command)
        self.logic = logic
        self.default_timeout = timeout
        self.depth = 0
        self.labels: set[str] = set()
        self._declared: list[set[str]] = [set()]
        self._label_stack: list[set[str]] = [set()]
        self._proc: Optional[subprocess.Popen] = None
        self.n_checks = 0
        self._spawn()

    # -- process plumbing ---------------------------------------------------

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as e:
            raise SolverError(f"cannot spawn solver {self.command!r}: {e}") from e
        self.depth = 0
        self.labels = set()
        self._declared = [set()]
        self._label_stack = [set()]
        try:
            self._send("(set-option :print-success false)")
            self._send("(set-option :produce-models true)")
            self._send("(set-option :produce-unsat-cores true)")
            self._send(f"(set-logic {self.logic})")
            self._send("(declare-fun fmul (Real Real) Real)")
        except SolverError as e:
            raise SolverError(f"solver handshake failed: {e}") from e

    def _send(self, line: str) -> None:
        p = self._proc
        if p is None or p.poll() is not None:
            raise SolverError("solver process is not running")
        try:
            p.stdin.write(line + "\n")
            p.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverError(f"solver pipe broken: {e}") from e

    def _read_response(self, deadline: Optional[float]) -> str:
        """One complete response: a bare word or a balanced s-expression."""
        p = self._proc
        if p is None:
            raise SolverError("solver process is not running")
        fd = p.stdout.fileno()
        buf = []
        depth = 0
        quoted = False
        instr = False
        seen_any = False
        while True:
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError
                ready, _, _ = select.select([fd], [], [], remaining)
                if not ready:
                    raise TimeoutError
            chunk = os.read(fd, 65536).decode("utf-8", "replace")
            if not chunk:
                raise SolverError("solver closed its output")
            for c in chunk:
                buf.append(c)
                if instr:
                    if c == '"':
                        instr = False
                    continue
                if quoted:
                    if c == "|":
                        quoted = False
                    continue
                if c == '"':
                    instr = True
                elif c == "|":
                    quoted = True
                elif c == "(":
                    depth += 1
                    seen_any = True
                elif c == ")":
                    depth -= 1
                elif not c.isspace():
                    seen_any = True
            text = "".join(buf)
            if seen_any and depth <= 0 and (text.rstrip() != text or depth == 0):
                stripped = text.strip()
                if stripped and depth == 0:
                    # bare words end at a newline; sexprs at balance
                    if stripped.startswith("(") or text.endswith("\n"):
                        return stripped

    def _ask(self, line: str, timeout: Optional[float]) -> str:
        deadline = None
        if timeout is not None:
            deadline = time.monotonic() + timeout
        self._send(line)
        try:
            resp = self._read_response(deadline)
        except TimeoutError:
            self.restart()
            raise
        if resp.startswith("(error"):
            raise SolverError(f"solver error: {resp}")
        return resp

    def restart(self) -> None:
        self.close()
        self._spawn()

    def close(self) -> None:
        p = self._proc
        self._proc = None
        if p is not None:
            try:
                p.kill()
            except OSError:
                pass
            try:
                p.wait(timeout=5)
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- declarations and assertions -----------------------------------------

    def _is_declared(self, name: str) -> bool:
        return any(name in s for s in self._declared)

    def declare_vars(self, fs: Sequence[Term]) -> None:
        for f in fs:
            for v in terms.vars_of(f):
                if not self._is_declared(v.data):
                    self._send(f"(declare-fun {smt2.serialize_symbol(v.data)} () {v.sort})")
                    self._declared[-1].add(v.data)

    def assert_formula(self, f: Term, label: Optional[str] = None) -> None:
        self.declare_vars([f])
        if label is None:
            self._send(f"(assert {smt2.serialize_term(f)})")
            return
        if label in self.labels:
            raise SolverError(f"duplicate assertion label {label!r}")
        self.labels.add(label)
        self._label_stack[-1].add(label)
        self._send(f"(assert (! {smt2.serialize_term(f)} :named {label}))")

    def push(self) -> None:
        self._send("(push 1)")
        self.depth += 1
        self._declared.append(set())
        self._label_stack.append(set())

    def pop(self) -> None:
        if self.depth == 0:
            raise SolverError("pop on empty stack")
        self._send("(pop 1)")
        self.depth -= 1
        self._declared.pop()
        self.labels -= self._label_stack.pop()

    # -- checks ----------------------------------------------------------------

    def check_sat(self, timeout: Optional[float] = None) -> str:
        timeout = timeout if timeout is not None else self.default_timeout
        self.n_checks += 1
        resp = self._ask("(check-sat)", timeout)
        if resp in ("sat", "unsat", "unknown"):
            return resp
        raise SolverError(f"unexpected check-sat answer: {resp!r}")

    def get_model(self, variables: Sequence[Term],
                  fmul_terms: Sequence[Term] = (),
                  timeout: Optional[float] = None) -> terms.Model:
        items = list(variables) + list(fmul_terms)
        if not items:
            return terms.Model()
        q = " ".join(smt2.serialize_term(t) for t in items)
        resp = self._ask(f"(get-value ({q}))", timeout)
        try:
            tree = smt2.read_sexprs(resp)
        except ParseError as e:
            raise SolverError(f"unparsable get-value reply: {e}") from e
        if len(tree) != 1 or not isinstance(tree[0], list) or len(tree[0]) != len(items):
            raise SolverError(f"malformed get-value reply: {resp!r}")
        model = terms.Model()
        for t, pair in zip(items, tree[0]):
            if not (isinstance(pair, list) and len(pair) >= 2):
                raise SolverError(f"malformed value pair: {pair!r}")
            vsx = pair[-1]
            if t.sort == BOOL:
                sval = str(vsx)
                if sval not in ("true", "false"):
                    raise SolverError(f"expected boolean value, got {vsx!r}")
                val: object = sval == "true"
            else:
                val = smt2.parse_numeral(vsx)
                if val is None:
                    raise SolverError(f"non-rational model value: {pair!r}")
            if t.kind == "var":
                model.vars[t.data] = val
            else:
                model.fmuls[t] = val
        return model

    def get_unsat_core(self, timeout: Optional[float] = None) -> list[str]:
        resp = self._ask("(get-unsat-core)", timeout)
        try:
            tree = smt2.read_sexprs(resp)
        except ParseError as e:
            raise SolverError(f"unparsable unsat core: {e}") from e
        if len(tree) != 1 or not isinstance(tree[0], list):
            raise SolverError(f"malformed unsat core: {resp!r}")
        return [str(s) for s in tree[0]]

    # -- one-shot convenience ----------------------------------------------------

    def check(self, assertions: Sequence[tuple[str, Term]],
              timeout: Optional[float] = None) -> SolverVerdict:
        """Assert under a push, check, extract model/core, pop; the session
        stays reusable."""
        timeout = timeout if timeout is not None else self.default_timeout
        deadline = time.monotonic() + timeout if timeout is not None else None

        def left() -> Optional[float]:
            if deadline is None:
                return None
            return max(deadline - time.monotonic(), 0.001)

        fs = [f for _l, f in assertions]
        apps = []
        seen = set()
        for f in fs:
            for a in terms.fmuls_of(f):
                if a not in seen:
                    seen.add(a)
                    apps.append(a)
        variables = []
        vseen = set()
        for f in fs:
            for v in terms.vars_of(f):
                if v.data not in vseen:
                    vseen.add(v.data)
                    variables.append(v)
        try:
            self.push()
            for label, f in assertions:
                self.assert_formula(f, label)
            res = self.check_sat(left())
            if res == "sat":
                model = self.get_model(variables, apps, left())
                verdict = SolverVerdict("sat", model=model)
            elif res == "unsat":
                core = self.get_unsat_core(left())
                verdict = SolverVerdict("unsat", core=core)
            else:
                verdict = SolverVerdict("unknown", reason="solver returned unknown")
            self.pop()
            return verdict
        except TimeoutError:
            return SolverVerdict("unknown", reason="timeout")
        except SolverError as e:
            try:
                self.restart()
            except SolverError:
                pass
            return SolverVerdict("unknown", reason=str(e))


def start(command: Sequence[str] | str = DEFAULT_SOLVER_CMD,
          logic: str = "QF_UFLRA",
          timeout: Optional[float] = None) -> SolverSession:
    return SolverSession(command, logic, timeout)
