"""Satisfiability of quantifier-free nonlinear real arithmetic via
abstraction to LRA+EUF and incremental refinement.

The loop: check the abstraction, try to lift the LRA+EUF model to a real
NRA model (three strategies: direct evaluation, multiplication-line
underapproximation, or an external complete NRA solver), refine with
tangent/monotonicity lemmas otherwise.  Unsat answers are sound; sat
answers carry a model that is re-verified by exact evaluation; budget
exhaustion yields unknown (rational models only; irrational-only
formulas always exhaust).
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import abstraction, backend, refinement, smt2, terms
from .refinement import Axiom, Frontier
from .terms import Model, Term


@dataclass
class NraConfig:
    solver_cmd: Sequence[str] | str = backend.DEFAULT_SOLVER_CMD
    nra_solver_cmd: Optional[Sequence[str] | str] = None
    model_finder: str = "lines"  # "eval" | "lines" | "nra"
    max_iterations: int = 100
    timeout: Optional[float] = None
    all_tangent_points: bool = False
    rounding_threshold: int = refinement.ROUNDING_THRESHOLD_DEFAULT
    sign_axioms: bool = True
    commutativity_axioms: bool = False
    dump_lemmas: Optional[str] = None
    stats: dict = field(default_factory=dict)

    def bump(self, key: str, n: int = 1) -> None:
        self.stats[key] = self.stats.get(key, 0) + n


@dataclass
class SmtVerdict:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[Model] = None
    axioms: list[Axiom] = field(default_factory=list)
    reason: str = ""
    iterations: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


def _log_lemmas(config: NraConfig, axioms: Sequence[Axiom]) -> None:
    if not config.dump_lemmas or not axioms:
        return
    with open(config.dump_lemmas, "a", encoding="utf-8") as fh:
        for a in axioms:
            fh.write(a.sexpr() + "\n")


def _deadline(config: NraConfig) -> Optional[float]:
    if config.timeout is None:
        return None
    return time.monotonic() + config.timeout


def _left(deadline: Optional[float]) -> Optional[float]:
    if deadline is None:
        return None
    return max(deadline - time.monotonic(), 0.001)


def _expired(deadline: Optional[float]) -> bool:
    return deadline is not None and time.monotonic() >= deadline


# ---------------------------------------------------------------------------
# model finders


def get_nra_model_eval(phihat: Term, model: Model,
                       fmuls: Sequence[Term]) -> Optional[Model]:
    """The simplest lift: accept the model iff every fmul value already
    equals the exact product of its argument values."""
    for m in fmuls:
        s, t = m.args
        if model.fmuls[m] != terms.evaluate(s, model) * terms.evaluate(t, model):
            return None
    return model


def _induced_assignment(phihat: Term, model: Model) -> Term:
    lits = []
    for a in terms.atoms_of(phihat):
        lits.append(a if terms.evaluate(a, model) else terms.not_(a))
    return terms.and_(*lits)


def multiplication_lines(model: Model, fmuls: Sequence[Term]) -> Term:
    out = []
    for m in fmuls:
        s, t = m.args
        vs = terms.evaluate(s, model)
        vt = terms.evaluate(t, model)
        out.append(terms.or_(
            terms.and_(terms.eq(s, terms.rcon(vs)),
                       terms.eq(m, terms.scale(vs, t))),
            terms.and_(terms.eq(t, terms.rcon(vt)),
                       terms.eq(m, terms.scale(vt, s)))))
    return terms.and_(*out)


def get_nra_model_lines(phihat: Term, model: Model, fmuls: Sequence[Term],
                        session: backend.SolverSession,
                        timeout: Optional[float] = None) -> Optional[Model]:
    """Conjoin the truth assignment induced on the atoms with the
    multiplication lines (one factor pinned per fmul) and ask the LRA+EUF
    solver; any model of that underapproximation has exact products."""
    if not fmuls:
        return model
    psi = terms.and_(_induced_assignment(phihat, model),
                     multiplication_lines(model, fmuls))
    variables = terms.vars_of(phihat)
    # solver/timeout failures propagate: they invalidate the session state
    # shared with the refinement loop, which must abort as unknown
    session.push()
    session.assert_formula(psi)
    res = session.check_sat(timeout)
    if res != "sat":
        session.pop()
        return None
    out = session.get_model(variables, list(fmuls), timeout)
    session.pop()
    for m in fmuls:
        s, t = m.args
        if out.fmuls[m] != terms.evaluate(s, out) * terms.evaluate(t, out):
            return None  # solver gave a non-line model; treat as failure
    return out


def get_nra_model_complete(phihat: Term, model: Model, fmuls: Sequence[Term],
                           nra_cmd: Optional[Sequence[str] | str],
                           timeout: Optional[float] = None) -> Optional[Model]:
    """Ship the concretized induced assignment to an external complete NRA
    solver; only exact rational witnesses are accepted."""
    if not nra_cmd:
        return None
    psi = abstraction.concretize(_induced_assignment(phihat, model))
    variables = terms.vars_of(psi)
    try:
        with backend.SolverSession(nra_cmd, logic="QF_NRA") as s:
            s.push()
            s.assert_formula(psi)
            res = s.check_sat(timeout)
            if res != "sat":
                return None
            try:
                out = s.get_model(variables, (), timeout)
            except backend.SolverError as e:
                print(f"warning: external NRA model not rational: {e}",
                      file=sys.stderr)
                return None
    except (backend.SolverError, TimeoutError):
        return None
    full = out.extended_with_products(list(fmuls))
    for m in fmuls:
        full.fmuls[m] = terms.evaluate(m.args[0], full) * terms.evaluate(m.args[1], full)
    return full


# ---------------------------------------------------------------------------
# the loop


def smt_nra_check_ext(phihat: Term, fmuls: Sequence[Term],
                      config: NraConfig,
                      session: Optional[backend.SolverSession] = None,
                      ) -> SmtVerdict:
    """Fig.-2 style loop over an already-abstract formula.  On unsat the
    verdict carries the dynamically added axioms (static axioms travel
    inside phihat)."""
    own = session is None
    if own:
        session = backend.start(config.solver_cmd)
    deadline = _deadline(config)
    fmuls = list(fmuls)
    variables = terms.vars_of(phihat)
    gamma: list[Axiom] = []
    frontiers: dict[Term, Frontier] = {}
    asserted: set[Term] = set()
    pushes = 0
    verdict: Optional[SmtVerdict] = None
    iteration = 0
    try:
        session.push()
        pushes += 1
        session.assert_formula(phihat)
        while True:
            if iteration >= config.max_iterations or _expired(deadline):
                verdict = SmtVerdict("unknown", axioms=gamma,
                                     reason="budget exhausted",
                                     iterations=iteration)
                break
            iteration += 1
            config.bump("solver_calls")
            res = session.check_sat(_left(deadline))
            if res == "unsat":
                verdict = SmtVerdict("unsat", axioms=gamma, iterations=iteration)
                break
            if res != "sat":
                verdict = SmtVerdict("unknown", axioms=gamma,
                                     reason="solver returned unknown",
                                     iterations=iteration)
                break
            model = session.get_model(variables, fmuls, _left(deadline))
            lifted = _lift(phihat, model, fmuls, config, session, deadline)
            if lifted is not None:
                _verify_sat(phihat, lifted, fmuls)
                verdict = SmtVerdict("sat", model=lifted, iterations=iteration)
                break
            new = refinement.refine(model, fmuls, frontiers,
                                    config.all_tangent_points,
                                    config.rounding_threshold)
            fresh = [a for a in new if a.formula not in asserted]
            if not fresh:
                # every blocking axiom is already asserted: the solver keeps
                # returning the same spurious region; give up honestly
                verdict = SmtVerdict("unknown", axioms=gamma,
                                     reason="refinement stalled",
                                     iterations=iteration)
                break
            _log_lemmas(config, fresh)
            for a in fresh:
                config.bump(f"lemmas_{a.kind}")
            session.push()
            pushes += 1
            for a in fresh:
                session.assert_formula(a.formula)
                asserted.add(a.formula)
            gamma.extend(fresh)
    except refinement.RefinementError as e:
        verdict = SmtVerdict("unknown", axioms=gamma, reason=str(e),
                             iterations=iteration)
    except TimeoutError:
        verdict = SmtVerdict("unknown", axioms=gamma, reason="timeout",
                             iterations=iteration)
        pushes = 0  # session was restarted by the backend
    except backend.SolverError as e:
        verdict = SmtVerdict("unknown", axioms=gamma, reason=str(e),
                             iterations=iteration)
        pushes = 0
        try:
            session.restart()
        except backend.SolverError:
            pass
    finally:
        if own:
            session.close()
        else:
            for _ in range(pushes):
                try:
                    session.pop()
                except backend.SolverError:
                    break
    return verdict


def _oversized_model(model: Model, fmuls, cap_bits: int = 128) -> bool:
    for m in fmuls:
        for v in (terms.evaluate(m.args[0], model),
                  terms.evaluate(m.args[1], model), model.fmuls[m]):
            if (v.numerator.bit_length() > cap_bits
                    or v.denominator.bit_length() > cap_bits):
                return True
    return False


def _lift(phihat, model, fmuls, config, session, deadline):
    finder = config.model_finder
    if finder == "eval" or not fmuls:
        return get_nra_model_eval(phihat, model, fmuls)
    if _oversized_model(model, fmuls):
        # line constants this large would dominate solving time; the direct
        # product check still catches lucky models
        return get_nra_model_eval(phihat, model, fmuls)
    if finder == "lines":
        return get_nra_model_lines(phihat, model, fmuls, session, _left(deadline))
    if finder == "nra":
        if config.nra_solver_cmd:
            out = get_nra_model_complete(phihat, model, fmuls,
                                         config.nra_solver_cmd, _left(deadline))
            if out is not None:
                return out
        out = get_nra_model_lines(phihat, model, fmuls, session, _left(deadline))
        if out is not None:
            return out
        return get_nra_model_eval(phihat, model, fmuls)
    raise ValueError(f"unknown model finder {finder!r}")


def _verify_sat(phihat: Term, model: Model, fmuls: Sequence[Term]) -> None:
    for m in fmuls:
        s, t = m.args
        prod = terms.evaluate(s, model) * terms.evaluate(t, model)
        if model.fmuls[m] != prod:
            raise AssertionError("sat model has an inexact product")
    if terms.evaluate(phihat, model) is not True:
        raise AssertionError("sat model does not satisfy the formula")


def smt_nra_check(phi: Term, config: Optional[NraConfig] = None,
                  session: Optional[backend.SolverSession] = None) -> SmtVerdict:
    """Satisfiability of a quantifier-free NRA formula."""
    config = config or NraConfig()
    res = abstraction.abstract_formula(phi, config.sign_axioms,
                                       config.commutativity_axioms)
    phihat = res.with_axioms()
    verdict = smt_nra_check_ext(phihat, res.fmuls, config, session)
    if verdict.is_sat:
        # final soundness gate: the original formula, products multiplied out
        if terms.evaluate(phi, verdict.model) is not True:
            raise AssertionError("model does not satisfy the original formula")
    return verdict
