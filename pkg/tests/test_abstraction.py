import random
from fractions import Fraction

from nlmc import abstraction as A, terms as T

from conftest import rand_bool, rand_fraction

x, y, z = T.var("x"), T.var("y"), T.var("z")


def test_mul_becomes_fmul():
    r = A.abstract_formula(T.ge(T.mul(x, y), z))
    assert r.abstract_formula == T.ge(T.fmul(x, y), z)
    assert T.fmul(x, y) in r.fmuls


def test_scale_untouched():
    f = T.ge(T.add(T.scale(3, x), T.mul(x, x)), T.rcon(0))
    r = A.abstract_formula(f)
    assert r.abstract_formula == T.ge(T.add(T.scale(3, x), T.fmul(x, x)),
                                      T.rcon(0))


def test_linear_unchanged():
    f = T.ge(T.add(x, y), T.rcon(0))
    r = A.abstract_formula(f)
    assert r.abstract_formula == f
    assert r.fmuls == [] and r.static_axioms == []


def test_no_mul_survives_no_fmul_survives():
    rng = random.Random(5)
    for _ in range(100):
        f = rand_bool(rng, [x, y, z], rng.randint(1, 3), nonlinear=True)
        af = A.abstract_term(f)
        assert T.muls_of(af) == []
        cf = A.concretize(af)
        assert T.fmuls_of(cf) == []


def test_concretize_roundtrip_random():
    rng = random.Random(6)
    for _ in range(200):
        f = rand_bool(rng, [x, y, z], rng.randint(1, 3), nonlinear=True)
        assert A.concretize(A.abstract_term(f)) == f


def test_static_axioms_six_conjuncts():
    axs, introduced = A.static_axioms([T.fmul(x, y)])
    assert len(axs) == 6
    assert all(a.kind == "static" for a in axs)
    # sign instances mention three new applications
    assert len(introduced) == 3


def test_static_axioms_square_degenerates():
    axs, _ = A.static_axioms([T.fmul(x, x)])
    m = T.fmul(x, x)
    zero_parts = [a.formula for a in axs][-2:]
    assert zero_parts[0] == T.iff(T.eq(x, T.ZERO), T.eq(m, T.ZERO))
    assert zero_parts[1] == T.implies(T.not_(T.eq(x, T.ZERO)), T.gt(m, T.ZERO))


def test_static_axioms_empty():
    assert A.static_axioms([]) == ([], [])


def test_static_axioms_nra_valid_by_sampling():
    rng = random.Random(7)
    axs, _ = A.static_axioms([T.fmul(x, y)])
    for _ in range(2000):
        vx, vy = rand_fraction(rng), rand_fraction(rng)
        model = T.Model({"x": vx, "y": vy})
        model = model.extended_with_products([a.formula for a in axs])
        for a in axs:
            assert T.evaluate(a.formula, model) is True


def test_over_approximation_soundness_sampling():
    # extending a variable assignment with exact products satisfies
    # abstract(f) + static axioms iff it satisfies f
    rng = random.Random(8)
    vs = [x, y, z]
    for i in range(1000):
        f = rand_bool(rng, vs, rng.randint(1, 3), nonlinear=True)
        r = A.abstract_formula(f)
        m = T.Model({v.data: rand_fraction(rng) for v in vs})
        ext = m.extended_with_products(
            [r.abstract_formula] + [a.formula for a in r.static_axioms])
        concrete = T.evaluate(f, m)
        abstract = T.evaluate(r.abstract_formula, ext)
        assert concrete == abstract, i
        for a in r.static_axioms:
            assert T.evaluate(a.formula, ext) is True, i


def test_abstract_system_intro():
    from nlmc.vmt import TransitionSystem

    ts = TransitionSystem(
        [x, y, z],
        T.and_(T.ge(x, T.rcon(2)), T.ge(y, T.rcon(2)), T.eq(z, T.mul(x, y))),
        T.and_(T.eq(T.prime(x), T.add(x, T.rcon(1))),
               T.eq(T.prime(y), T.add(y, T.rcon(1))),
               T.eq(T.prime(z), T.mul(T.prime(x), T.prime(y)))),
        [T.ge(z, T.add(x, y))])
    ahat = A.abstract_system(ts)
    assert T.muls_of(ahat.init) == [] and T.muls_of(ahat.trans) == []
    assert T.fmul(x, y) in T.fmuls_of(ahat.init)
    # transition axioms cover both the current and the next frame
    tf = T.fmuls_of(ahat.trans)
    assert T.fmul(x, y) in tf
    assert T.fmul(T.prime(x), T.prime(y)) in tf
    assert ahat.properties[0] == T.ge(z, T.add(x, y))


def test_abstract_property_square():
    from nlmc.vmt import TransitionSystem

    ts = TransitionSystem([x], T.eq(x, T.rcon(1)),
                          T.eq(T.prime(x), x), [T.ge(T.mul(x, x), T.rcon(0))])
    ahat = A.abstract_system(ts)
    assert ahat.properties[0] == T.ge(T.fmul(x, x), T.rcon(0))


def test_commutativity_flag_emits_reflexive_instances():
    axs, _ = A.static_axioms([T.fmul(x, y)], commutativity=True)
    assert len(axs) == 7
    refl = axs[0].formula
    assert refl == T.eq(T.fmul(x, y), T.fmul(y, x))  # same canonical term
