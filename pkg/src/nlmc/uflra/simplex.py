"""Incremental simplex for linear real arithmetic over delta-rationals.

General-simplex layout: every asserted atom is a bound on a variable
(original or slack); slack variables carry tableau rows expressing them
as linear combinations of nonbasic variables.  Strict bounds are encoded
with an infinitesimal delta component and resolved to plain rationals
when a model is extracted.

Bounds carry opaque integer reasons (SAT literal codes); conflicts are
reported as lists of reasons whose bounds are jointly infeasible.

Feasibility checks are driven by a set of suspect basic variables (those
whose assignment or bounds changed), so a check after a no-op assertion
costs nothing.  Comparisons cross-multiply numerators/denominators
directly; profiling showed Fraction's generic comparison dominating
otherwise.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

_F0 = Fraction(0)


class Delta:
    """q + d*delta with delta an infinitesimal positive; lexicographic order."""

    __slots__ = ("q", "d")

    def __init__(self, q: Fraction, d: Fraction = _F0):
        self.q = q
        self.d = d

    def __add__(self, o: "Delta") -> "Delta":
        return Delta(self.q + o.q, self.d + o.d)

    def __sub__(self, o: "Delta") -> "Delta":
        return Delta(self.q - o.q, self.d - o.d)

    def scaled(self, c: Fraction) -> "Delta":
        return Delta(self.q * c, self.d * c)

    def __lt__(self, o: "Delta") -> bool:
        a, b = self.q, o.q
        c = a.numerator * b.denominator - b.numerator * a.denominator
        if c:
            return c < 0
        a, b = self.d, o.d
        return a.numerator * b.denominator < b.numerator * a.denominator

    def __le__(self, o: "Delta") -> bool:
        a, b = self.q, o.q
        c = a.numerator * b.denominator - b.numerator * a.denominator
        if c:
            return c < 0
        a, b = self.d, o.d
        return a.numerator * b.denominator <= b.numerator * a.denominator

    def __eq__(self, o) -> bool:
        return isinstance(o, Delta) and self.q == o.q and self.d == o.d

    def __hash__(self):
        return hash((self.q, self.d))

    def resolve(self, d0: Fraction) -> Fraction:
        return self.q + self.d * d0

    def __repr__(self):
        if self.d == 0:
            return f"{self.q}"
        return f"{self.q}{'+' if self.d > 0 else ''}{self.d}d"


class Conflict(Exception):
    def __init__(self, reasons: list[int]):
        super().__init__(f"lra conflict: {reasons}")
        self.reasons = reasons


class Simplex:
    def __init__(self):
        self.nvars = 0
        self.lower: list[Optional[Delta]] = []
        self.upper: list[Optional[Delta]] = []
        self.lo_reason: list[int] = []
        self.up_reason: list[int] = []
        self.beta: list[Delta] = []
        # rows[b] = {nonbasic: coef}; b = sum coef*nonbasic
        self.rows: dict[int, dict[int, Fraction]] = {}
        self.is_basic: list[bool] = []
        # rows (by basic var) that mention a given nonbasic var
        self.col: dict[int, set[int]] = {}
        # basic vars whose assignment/bounds changed since the last check
        self.suspects: set[int] = set()
        # trail of bound changes for backtracking
        self.trail: list[tuple[int, bool, Optional[Delta], int]] = []

    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.lower.append(None)
        self.upper.append(None)
        self.lo_reason.append(0)
        self.up_reason.append(0)
        self.beta.append(Delta(_F0))
        self.is_basic.append(False)
        self.col[v] = set()
        return v

    def new_slack(self, combo: dict[int, Fraction]) -> int:
        """Slack variable s with row s = sum(combo); combo may mention basic
        variables, which get expanded through their rows."""
        s = self.new_var()
        row: dict[int, Fraction] = {}
        for x, c in combo.items():
            if self.is_basic[x]:
                for y, cy in self.rows[x].items():
                    row[y] = row.get(y, _F0) + c * cy
            else:
                row[x] = row.get(x, _F0) + c
        row = {x: c for x, c in row.items() if c != 0}
        self.rows[s] = row
        self.is_basic[s] = True
        for x in row:
            self.col[x].add(s)
        self.beta[s] = self._row_value(row)
        self.suspects.add(s)
        return s

    def _row_value(self, row: dict[int, Fraction]) -> Delta:
        q = _F0
        d = _F0
        for x, c in row.items():
            b = self.beta[x]
            q += c * b.q
            d += c * b.d
        return Delta(q, d)

    # -- bound assertion ----------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def backtrack(self, mark: int) -> None:
        while len(self.trail) > mark:
            v, is_lower, old, old_reason = self.trail.pop()
            if is_lower:
                self.lower[v] = old
                self.lo_reason[v] = old_reason
            else:
                self.upper[v] = old
                self.up_reason[v] = old_reason

    def assert_lower(self, x: int, c: Delta, reason: int) -> None:
        lo = self.lower[x]
        if lo is not None and c <= lo:
            return
        up = self.upper[x]
        if up is not None and up < c:
            raise Conflict([reason, self.up_reason[x]])
        self.trail.append((x, True, lo, self.lo_reason[x]))
        self.lower[x] = c
        self.lo_reason[x] = reason
        if self.is_basic[x]:
            self.suspects.add(x)
        elif self.beta[x] < c:
            self._update(x, c)

    def assert_upper(self, x: int, c: Delta, reason: int) -> None:
        up = self.upper[x]
        if up is not None and up <= c:
            return
        lo = self.lower[x]
        if lo is not None and c < lo:
            raise Conflict([reason, self.lo_reason[x]])
        self.trail.append((x, False, up, self.up_reason[x]))
        self.upper[x] = c
        self.up_reason[x] = reason
        if self.is_basic[x]:
            self.suspects.add(x)
        elif c < self.beta[x]:
            self._update(x, c)

    def _update(self, x: int, v: Delta) -> None:
        delta = v - self.beta[x]
        self.beta[x] = v
        for b in self.col[x]:
            c = self.rows[b].get(x)
            if c is not None and c != 0:
                self.beta[b] = self.beta[b] + delta.scaled(c)
                self.suspects.add(b)

    # -- feasibility --------------------------------------------------------

    def _violated(self, b: int) -> bool:
        lo = self.lower[b]
        if lo is not None and self.beta[b] < lo:
            return True
        up = self.upper[b]
        return up is not None and up < self.beta[b]

    def check(self) -> None:
        """Pivot until feasible or raise Conflict (Bland's rule over the
        suspect set, which always contains every violated basic var)."""
        while self.suspects:
            x = None
            for b in sorted(self.suspects):
                if b in self.rows and self._violated(b):
                    x = b
                    break
                self.suspects.discard(b)
            if x is None:
                return
            lo = self.lower[x]
            bx = self.beta[x]
            if lo is not None and bx < lo:
                self._fix_low(x, lo)
            else:
                self._fix_high(x, self.upper[x])

    def _fix_low(self, x: int, lo: Delta) -> None:
        row = self.rows[x]
        pivot = None
        for y in sorted(row):
            c = row[y]
            if c > 0:
                u = self.upper[y]
                if u is None or self.beta[y] < u:
                    pivot = y
                    break
            else:
                l = self.lower[y]
                if l is None or l < self.beta[y]:
                    pivot = y
                    break
        if pivot is None:
            reasons = [self.lo_reason[x]]
            for y in sorted(row):
                reasons.append(self.up_reason[y] if row[y] > 0 else self.lo_reason[y])
            raise Conflict([r for r in reasons if r != 0])
        self._pivot_and_update(x, pivot, lo)

    def _fix_high(self, x: int, up: Delta) -> None:
        row = self.rows[x]
        pivot = None
        for y in sorted(row):
            c = row[y]
            if c < 0:
                u = self.upper[y]
                if u is None or self.beta[y] < u:
                    pivot = y
                    break
            else:
                l = self.lower[y]
                if l is None or l < self.beta[y]:
                    pivot = y
                    break
        if pivot is None:
            reasons = [self.up_reason[x]]
            for y in sorted(row):
                reasons.append(self.lo_reason[y] if row[y] > 0 else self.up_reason[y])
            raise Conflict([r for r in reasons if r != 0])
        self._pivot_and_update(x, pivot, up)

    def _pivot_and_update(self, x: int, y: int, v: Delta) -> None:
        # x basic, y nonbasic in row(x); make x nonbasic at value v
        a = self.rows[x][y]
        dy = (v - self.beta[x]).scaled(Fraction(1) / a)
        self.beta[x] = v
        self.beta[y] = self.beta[y] + dy
        for b in self.col[y]:
            if b != x:
                c = self.rows[b].get(y)
                if c is not None and c != 0:
                    self.beta[b] = self.beta[b] + dy.scaled(c)
                    self.suspects.add(b)
        self._pivot(x, y)
        self.suspects.discard(x)
        self.suspects.add(y)

    def _pivot(self, x: int, y: int) -> None:
        row = self.rows.pop(x)
        a = row.pop(y)
        # y = (x - rest)/a
        inv = Fraction(1) / a
        new_row = {x: inv}
        for z, c in row.items():
            new_row[z] = -c * inv
        for z in row:
            self.col[z].discard(x)
        self.col[y].discard(x)
        self.is_basic[x] = False
        self.is_basic[y] = True
        self.rows[y] = new_row
        for z in new_row:
            self.col[z].add(y)
        # substitute y out of all other rows
        for b in list(self.col[y]):
            if b == y or b not in self.rows:
                self.col[y].discard(b)
                continue
            rb = self.rows[b]
            cy = rb.pop(y, None)
            if cy is None or cy == 0:
                self.col[y].discard(b)
                continue
            for z, c in new_row.items():
                nv = rb.get(z, _F0) + cy * c
                if nv == 0:
                    if z in rb:
                        del rb[z]
                        self.col[z].discard(b)
                else:
                    if z not in rb:
                        self.col[z].add(b)
                    rb[z] = nv
            self.col[y].discard(b)
        self.col[y] = set()

    # -- models ---------------------------------------------------------------

    def resolve_delta(self, separate: list[tuple[Delta, Delta]] = ()) -> Fraction:
        """Pick a concrete positive value for delta that preserves every
        bound comparison and keeps each `separate` pair of values distinct."""
        d0 = Fraction(1)

        def limit(gap_q: Fraction, gap_d: Fraction):
            # need gap_q + gap_d*d0 >= 0 where gap_q >= 0 is known; only a
            # negative delta coefficient constrains d0
            nonlocal d0
            if gap_d < 0 and gap_q > 0:
                d0 = min(d0, -gap_q / gap_d / 2)

        for x in range(self.nvars):
            b = self.beta[x]
            lo = self.lower[x]
            if lo is not None:
                limit(b.q - lo.q, b.d - lo.d)
            up = self.upper[x]
            if up is not None:
                limit(up.q - b.q, up.d - b.d)
        for a, b in separate:
            if a != b and a.d != b.d and a.q != b.q:
                # avoid the collision point d0 = (a.q-b.q)/(b.d-a.d)
                coll = (a.q - b.q) / (b.d - a.d)
                if coll > 0 and coll <= d0:
                    d0 = coll / 2
        return d0

    def model(self, d0: Fraction) -> list[Fraction]:
        return [self.beta[x].resolve(d0) for x in range(self.nvars)]
