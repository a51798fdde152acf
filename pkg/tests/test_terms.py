import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlmc import terms as T
from nlmc.terms import Model, evaluate

from conftest import rand_bool, rand_fraction

x, y, z = T.var("x"), T.var("y"), T.var("z")


def test_rationals_canonical():
    assert T.rcon(Fraction(2, 4)).value == Fraction(1, 2)
    assert T.rcon("0.5").value == Fraction(1, 2)
    assert T.rcon(Fraction(2, 4)) == T.rcon(Fraction(1, 2))


def test_evaluate_linear():
    m = Model({"x": Fraction(2), "y": Fraction(3)})
    e = T.add(T.scale(3, x), T.scale(2, y), T.rcon(-6))
    assert evaluate(e, m) == 6


def test_evaluate_fmul_lookup():
    f = T.ge(T.fmul(x, y), T.add(x, y))
    m = Model({"x": Fraction(2), "y": Fraction(2)}, {T.fmul(x, y): Fraction(5)})
    assert evaluate(f, m) is True


def test_evaluate_abs_ite():
    m = Model({"x": Fraction(-7, 2)})
    assert evaluate(T.abs_term(x), m) == Fraction(7, 2)


def test_evaluate_unassigned():
    with pytest.raises(T.UnassignedSymbolError) as ei:
        evaluate(T.add(x, y), Model({"x": Fraction(1)}))
    assert "y" in str(ei.value)
    with pytest.raises(T.UnassignedSymbolError):
        evaluate(T.fmul(x, y), Model({"x": Fraction(1), "y": Fraction(1)}))


def test_substitute_basic():
    xp = T.var("x2")
    assert T.substitute(T.add(x, y), {x: xp}) == T.add(xp, y)
    assert T.substitute(T.gt(x, T.rcon(0)), {x: x}) == T.gt(x, T.rcon(0))


def test_substitute_canonicalizes_fmul():
    # arguments stored in canonical order regardless of construction order
    assert T.fmul(y, x) == T.fmul(x, y)
    assert T.substitute(T.fmul(y, x), {}) == T.fmul(x, y)
    # after substitution the order is re-established
    w = T.var("w")
    assert T.substitute(T.fmul(x, y), {y: w}) == T.fmul(w, x)


def test_substitute_sort_mismatch():
    b = T.var("b", T.BOOL)
    with pytest.raises(T.TermError):
        T.substitute(T.add(x, y), {x: b})


def test_mul_constant_normalization():
    assert T.mul(T.rcon(3), x) == T.scale(3, x)
    assert T.mul(x, T.rcon(0)) == T.ZERO
    assert T.mul(T.rcon(2), T.rcon(3)).value == 6
    assert T.mul(x, y).kind == "mul"


def test_add_flatten_sort_fold():
    a = T.add(x, T.add(y, T.rcon(1)), T.rcon(2))
    b = T.add(T.rcon(3), y, x)
    assert a == b
    assert T.add(T.rcon(1), T.rcon(2)).value == 3
    assert T.add() == T.ZERO


def test_at_time_and_untime():
    f = T.eq(T.prime(x), T.add(x, T.rcon(1)))
    g = T.at_time(f, 3)
    assert T.var_names(g) == {"x@3", "x@4"}
    assert T.untime(g, 3) == f
    assert T.at_time(T.ge(x, T.rcon(2)), 0) == T.ge(T.var("x@0"), T.rcon(2))


def test_untime_spanning_error():
    f = T.and_(T.ge(T.var("x@1"), T.rcon(0)), T.ge(T.var("x@3"), T.rcon(0)))
    with pytest.raises(T.TermError):
        T.untime(f, 1)


def test_atoms_of():
    f = T.and_(T.gt(x, T.rcon(0)), T.not_(T.eq(y, T.rcon(1))))
    assert set(T.atoms_of(f)) == {T.gt(x, T.rcon(0)), T.eq(y, T.rcon(1))}


def test_fmuls_of_dedup():
    f = T.ge(T.add(T.fmul(x, y), T.fmul(y, x)), T.rcon(0))
    assert T.fmuls_of(f) == [T.fmul(x, y)]
    assert T.fmuls_of(T.ge(T.add(x, T.scale(2, y)), T.rcon(0))) == []


def test_structural_equality_and_hash():
    f1 = T.and_(T.gt(x, T.rcon(0)), T.lt(y, T.rcon(1)))
    f2 = T.and_(T.lt(y, T.rcon(1)), T.gt(x, T.rcon(0)))
    assert f1 == f2
    assert hash(f1) == hash(f2)
    assert len({f1, f2}) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_substitute_evaluate_commute(seed):
    # substitute-then-evaluate equals evaluate under the composed model
    rng = random.Random(seed)
    vs = [x, y, z]
    f = rand_bool(rng, vs, rng.randint(1, 3))
    w = T.var("w")
    repl = {z: T.add(w, T.rcon(1))}
    base = {"x": rand_fraction(rng), "y": rand_fraction(rng),
            "w": rand_fraction(rng)}
    m1 = Model(dict(base))
    m1.vars["z"] = base["w"] + 1
    m2 = Model(dict(base))
    assert evaluate(f, m1) == evaluate(T.substitute(f, repl), m2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 6))
def test_untime_at_time_roundtrip(seed, i):
    rng = random.Random(seed)
    vs = [x, y, z]
    f = rand_bool(rng, vs, rng.randint(0, 3))
    if rng.random() < 0.7:
        f = T.substitute(f, {z: T.prime(z)})
    assert T.untime(T.at_time(f, i), i) == f
