from fractions import Fraction

import pytest

from nlmc import abstraction as A, backend, nra, terms as T
from nlmc.nra import NraConfig, get_nra_model_eval, get_nra_model_lines, smt_nra_check

x, y = T.var("x"), T.var("y")
F = Fraction
m = T.fmul(x, y)


def cfg(**kw):
    return NraConfig(**kw)


def test_unsat_interval_argument():
    f = T.and_(T.ge(x, T.rcon(2)), T.ge(y, T.rcon(2)),
               T.le(T.mul(x, y), T.rcon(3)))
    v = smt_nra_check(f, cfg())
    assert v.is_unsat


def test_sat_with_substitution_witness():
    f = T.and_(T.eq(x, T.rcon(2)), T.eq(T.mul(x, y), T.rcon(6)))
    v = smt_nra_check(f, cfg())
    assert v.is_sat
    assert v.model.vars["x"] == 2 and v.model.vars["y"] == 3


def test_irrational_only_is_unknown():
    v = smt_nra_check(T.eq(T.mul(x, x), T.rcon(2)), cfg(max_iterations=25))
    assert v.status == "unknown"


def test_unsat_xy_lt_x_within_ten_iterations():
    f = T.and_(T.ge(x, T.rcon(1)), T.ge(y, T.rcon(1)), T.lt(T.mul(x, y), x))
    v = smt_nra_check(f, cfg())
    assert v.is_unsat and v.iterations <= 10


def test_budget_zero_aborts():
    v = smt_nra_check(T.eq(T.mul(x, x), T.rcon(4)), cfg(max_iterations=0))
    assert v.status == "unknown" and "budget" in v.reason


def test_eval_finder_examples():
    mod = T.Model({"x": F(2), "y": F(3)}, {m: F(6)})
    assert get_nra_model_eval(T.TRUE, mod, [m]) is mod
    mod2 = T.Model({"x": F(2), "y": F(3)}, {m: F(5)})
    assert get_nra_model_eval(T.TRUE, mod2, [m]) is None
    sq = T.fmul(x, x)
    mod3 = T.Model({"x": F(-2)}, {sq: F(4)})
    assert get_nra_model_eval(T.TRUE, mod3, [sq]) is mod3


def test_lines_finder_derived_examples(session):
    # φ̂: fmul(x,y)=6 ∧ x=2 with spurious y=0: lines pin x=2, giving y=3
    phihat = T.and_(T.eq(m, T.rcon(6)), T.eq(x, T.rcon(2)))
    spurious = T.Model({"x": F(2), "y": F(0)}, {m: F(6)})
    out = get_nra_model_lines(phihat, spurious, [m], session)
    assert out is not None
    assert out.vars["x"] == 2 and out.vars["y"] == 3
    assert out.fmuls[m] == 6

    # φ̂: fmul(x,y)=6 ∧ x=0: both multiplication lines contradict fmul=6
    phihat2 = T.and_(T.eq(m, T.rcon(6)), T.eq(x, T.rcon(0)))
    spurious2 = T.Model({"x": F(0), "y": F(5)}, {m: F(6)})
    assert get_nra_model_lines(phihat2, spurious2, [m], session) is None


def test_lines_finder_no_fmul_returns_model(session):
    phihat = T.gt(x, T.rcon(0))
    mod = T.Model({"x": F(1)})
    assert get_nra_model_lines(phihat, mod, [], session) is mod


def test_model_finder_eval_mode_still_decides():
    f = T.and_(T.eq(T.mul(x, y), T.rcon(4)), T.eq(x, T.rcon(2)),
               T.eq(y, T.rcon(2)))
    v = smt_nra_check(f, cfg(model_finder="eval"))
    assert v.is_sat


def test_complete_finder_unset_returns_none():
    mod = T.Model({"x": F(2), "y": F(0)}, {m: F(6)})
    assert nra.get_nra_model_complete(T.eq(m, T.rcon(6)), mod, [m], None) is None


def test_sat_soundness_gate_negative_square():
    f = T.and_(T.eq(T.mul(x, x), T.rcon(4)), T.le(x, T.rcon(0)))
    v = smt_nra_check(f, cfg())
    assert v.is_sat and v.model.vars["x"] == -2


def test_unsat_axioms_are_dynamic_only():
    f = T.and_(T.ge(x, T.rcon(2)), T.ge(y, T.rcon(2)),
               T.le(T.mul(x, y), T.rcon(3)))
    v = smt_nra_check(f, cfg())
    assert v.is_unsat
    for a in v.axioms:
        assert a.kind in ("tangent", "monotonicity")


def test_dump_lemmas(tmp_path):
    path = tmp_path / "lemmas.log"
    f = T.and_(T.ge(x, T.rcon(2)), T.ge(y, T.rcon(2)),
               T.le(T.mul(x, y), T.rcon(3)))
    v = smt_nra_check(f, cfg(dump_lemmas=str(path)))
    assert v.is_unsat
    lines = path.read_text().splitlines()
    assert lines and all(l.startswith("(axiom :kind ") for l in lines)


def test_timeout_gives_unknown():
    f = T.eq(T.mul(x, x), T.rcon(2))
    v = smt_nra_check(f, cfg(timeout=0.001, max_iterations=10**6))
    assert v.status == "unknown"
