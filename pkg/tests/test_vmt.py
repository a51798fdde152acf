import pytest

from nlmc import smt2, terms as T, vmt

x, y, z = T.var("x"), T.var("y"), T.var("z")

SIMPLE = """
(declare-fun x () Real)
(declare-fun x.next () Real)
(define-fun .sv0 () Real (! x :next x.next))
(define-fun .init () Bool (! (= x 0) :init true))
(define-fun .trans () Bool (! (= x.next (+ x 1)) :trans true))
(define-fun .p0 () Bool (! (>= x 0) :invar-property 0))
"""

INTRO = """
(set-logic QF_NRA)
(declare-fun x () Real) (declare-fun xn () Real)
(declare-fun y () Real) (declare-fun yn () Real)
(declare-fun z () Real) (declare-fun zn () Real)
(define-fun .sv0 () Real (! x :next xn))
(define-fun .sv1 () Real (! y :next yn))
(define-fun .sv2 () Real (! z :next zn))
(define-fun .init () Bool (! (and (>= x 2) (>= y 2) (= z (* x y))) :init true))
(define-fun .trans () Bool
  (! (and (= xn (+ x 1)) (= yn (+ y 1)) (= zn (* xn yn))) :trans true))
(define-fun .p0 () Bool (! (>= z (+ x y)) :invar-property 0))
"""


def test_parse_simple_counter():
    ts = vmt.parse_vmt(SIMPLE)
    assert [v.data for v in ts.variables] == ["x"]
    assert ts.init == T.eq(x, T.rcon(0))
    assert ts.trans == T.eq(T.prime(x), T.add(x, T.rcon(1)))
    assert ts.properties == [T.ge(x, T.rcon(0))]


def test_parse_intro_example():
    ts = vmt.parse_vmt(INTRO)
    assert [v.data for v in ts.variables] == ["x", "y", "z"]
    assert ts.init == T.and_(T.ge(x, T.rcon(2)), T.ge(y, T.rcon(2)),
                             T.eq(z, T.mul(x, y)))
    assert ts.trans == T.and_(
        T.eq(T.prime(x), T.add(x, T.rcon(1))),
        T.eq(T.prime(y), T.add(y, T.rcon(1))),
        T.eq(T.prime(z), T.mul(T.prime(x), T.prime(y))))
    assert ts.properties == [T.ge(z, T.add(x, y))]


def test_missing_trans():
    bad = SIMPLE.replace(":trans true", ":unknown true")
    with pytest.raises(smt2.ParseError) as ei:
        vmt.parse_vmt(bad)
    assert "transition relation" in str(ei.value)


def test_missing_init():
    bad = SIMPLE.replace(":init true", ":unknown true")
    with pytest.raises(smt2.ParseError):
        vmt.parse_vmt(bad)


def test_unpaired_symbol_rejected():
    bad = SIMPLE + "(declare-fun loose () Real)\n"
    with pytest.raises(smt2.ParseError) as ei:
        vmt.parse_vmt(bad)
    assert "loose" in str(ei.value)


def test_property_index_collision():
    bad = SIMPLE + '(define-fun .p1 () Bool (! (>= x 0) :invar-property 0))\n'
    with pytest.raises(smt2.ParseError) as ei:
        vmt.parse_vmt(bad)
    assert "collision" in str(ei.value)


def test_unsupported_sort():
    bad = SIMPLE.replace("(declare-fun x () Real)", "(declare-fun x () Int)")
    with pytest.raises(smt2.ParseError):
        vmt.parse_vmt(bad)


def test_live_property_rejected():
    bad = SIMPLE + '(define-fun .l0 () Bool (! (>= x 0) :live-property 0))\n'
    with pytest.raises(smt2.ParseError):
        vmt.parse_vmt(bad)


def test_bool_state_vars():
    text = """
(declare-fun m () Bool) (declare-fun mn () Bool)
(define-fun .sv0 () Bool (! m :next mn))
(define-fun .init () Bool (! m :init true))
(define-fun .trans () Bool (! (= mn (not m)) :trans true))
(define-fun .p0 () Bool (! (or m (not m)) :invar-property 0))
"""
    ts = vmt.parse_vmt(text)
    assert ts.variables[0].sort == T.BOOL


def test_serialize_roundtrip():
    for text in (SIMPLE, INTRO):
        ts = vmt.parse_vmt(text)
        ts2 = vmt.parse_vmt(vmt.serialize_vmt(ts))
        assert [v.data for v in ts2.variables] == [v.data for v in ts.variables]
        assert ts2.init == ts.init
        assert ts2.trans == ts.trans
        assert ts2.properties == ts.properties


def test_serialize_abstract_system_declares_fmul():
    from nlmc import abstraction

    ts = vmt.parse_vmt(INTRO)
    ahat = abstraction.abstract_system(ts)
    text = vmt.serialize_vmt(ahat, logic="QF_UFLRA")
    assert "(declare-fun fmul (Real Real) Real)" in text
    ts2 = vmt.parse_vmt(text)
    assert ts2.init == ahat.init


def test_parse_smt2_assertions():
    text = """
(set-logic QF_NRA)
(declare-fun x () Real)
(assert (>= x 2))
(assert (<= (* x x) 3))
(check-sat)
"""
    f = vmt.parse_smt2_assertions(text)
    assert f == T.and_(T.ge(x, T.rcon(2)), T.le(T.mul(x, x), T.rcon(3)))


def test_reserved_time_separator():
    bad = SIMPLE.replace("(declare-fun x () Real)", "(declare-fun x@0 () Real)")
    with pytest.raises(smt2.ParseError):
        vmt.parse_vmt(bad)
