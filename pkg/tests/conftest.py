import random
from fractions import Fraction

import pytest

from nlmc import backend, terms


@pytest.fixture(scope="session")
def session():
    """One long-lived solver session shared by protocol-level tests."""
    s = backend.start()
    yield s
    s.close()


def rand_fraction(rng: random.Random, lo=-8, hi=8, den=4) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), rng.randint(1, den))


def rand_linear(rng: random.Random, vs, coef=5):
    t = terms.rcon(rng.randint(-coef, coef))
    for v in rng.sample(vs, rng.randint(1, len(vs))):
        c = rng.randint(-coef, coef)
        if c:
            t = terms.add(t, terms.scale(c, v))
    return t


def rand_atom(rng: random.Random, vs, nonlinear=False, coef=5):
    a = rand_linear(rng, vs, coef)
    b = rand_linear(rng, vs, coef)
    if nonlinear:
        u, w = rng.choice(vs), rng.choice(vs)
        a = terms.add(a, terms.mul(u, w) if rng.random() < 0.8
                      else terms.scale(rng.randint(1, 3), terms.mul(u, w)))
    op = rng.choice([terms.le, terms.lt, terms.ge, terms.gt, terms.eq])
    return op(a, b)


def rand_bool(rng: random.Random, vs, depth, nonlinear=False, muls_left=None):
    """Random boolean combination; with `nonlinear`, sprinkles in products
    of two variables (at most muls_left of them)."""
    budget = muls_left if muls_left is not None else [3]

    def go(d):
        use_mul = nonlinear and budget[0] > 0 and rng.random() < 0.5
        if d == 0 or (rng.random() < 0.2 and d < 2):
            if use_mul:
                budget[0] -= 1
            return rand_atom(rng, vs, nonlinear=use_mul)
        k = rng.choice(["and", "or", "not", "imp"])
        if k == "not":
            return terms.not_(go(d - 1))
        a, b = go(d - 1), go(d - 1)
        return {"and": terms.and_, "or": terms.or_,
                "imp": terms.implies}[k](a, b)

    return go(depth)
