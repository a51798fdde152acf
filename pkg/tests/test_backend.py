import os
import sys
import tempfile
import textwrap
import time
from fractions import Fraction

import pytest

from nlmc import backend, terms as T

x, y = T.var("x"), T.var("y")


def test_unsat_core_subset_and_recheck(session):
    v = session.check([("a", T.gt(x, T.rcon(0))), ("b", T.lt(x, T.rcon(0))),
                       ("c", T.gt(y, T.rcon(5)))])
    assert v.is_unsat
    assert set(v.core) <= {"a", "b", "c"}
    members = {"a": T.gt(x, T.rcon(0)), "b": T.lt(x, T.rcon(0)),
               "c": T.gt(y, T.rcon(5))}
    v2 = session.check([(l, members[l]) for l in v.core])
    assert v2.is_unsat


def test_euf_freedom(session):
    f = T.and_(T.eq(T.fmul(x, y), T.rcon(6)), T.eq(x, T.rcon(2)))
    v = session.check([("a", f)])
    assert v.is_sat
    assert v.model.fmuls[T.fmul(x, y)] == 6
    assert v.model.vars["x"] == 2
    assert T.evaluate(f, v.model) is True


def test_exact_rational_model(session):
    v = session.check([("a", T.eq(x, T.rcon(Fraction(1, 3))))])
    assert v.is_sat and v.model.vars["x"] == Fraction(1, 3)


def test_models_satisfy_assertions(session):
    fs = [T.and_(T.gt(x, T.rcon(1)), T.lt(x, T.rcon(2))),
          T.or_(T.eq(y, x), T.gt(y, T.scale(2, x)))]
    v = session.check([("f0", fs[0]), ("f1", fs[1])])
    assert v.is_sat
    for f in fs:
        assert T.evaluate(f, v.model) is True


def test_session_reusable(session):
    for i in range(4):
        v = session.check([("a", T.eq(x, T.rcon(i)))])
        assert v.is_sat and v.model.vars["x"] == i


def test_concurrent_sessions_are_independent_processes():
    s1 = backend.start()
    s2 = backend.start()
    try:
        assert s1._proc.pid != s2._proc.pid
        s1.push()
        s1.assert_formula(T.gt(x, T.rcon(0)))
        assert s2.check([("a", T.lt(x, T.rcon(0)))]).is_sat
    finally:
        s1.close()
        s2.close()


def test_spawn_failure():
    with pytest.raises(backend.SolverError):
        backend.start("definitely-no-such-solver-binary")


def test_timeout_kills_and_restarts():
    script = tempfile.NamedTemporaryFile("w", suffix=".py", delete=False)
    script.write(textwrap.dedent("""
        import sys, time
        for line in sys.stdin:
            if "check-sat" in line:
                time.sleep(30)
                print("sat"); sys.stdout.flush()
    """))
    script.close()
    try:
        s = backend.SolverSession([sys.executable, script.name])
        pid_before = s._proc.pid
        t0 = time.monotonic()
        v = s.check([("a", T.gt(x, T.rcon(0)))], timeout=0.4)
        assert v.status == "unknown" and v.reason == "timeout"
        assert time.monotonic() - t0 < 5
        assert s._proc.pid != pid_before  # restarted
        s.close()
    finally:
        os.unlink(script.name)


def test_duplicate_label_rejected(session):
    session.push()
    session.assert_formula(T.gt(x, T.rcon(0)), label="dup")
    with pytest.raises(backend.SolverError):
        session.assert_formula(T.gt(x, T.rcon(1)), label="dup")
    session.pop()
    # after pop the label is free again
    session.push()
    session.assert_formula(T.gt(x, T.rcon(0)), label="dup")
    session.pop()
