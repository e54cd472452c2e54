import random

from hypothesis import given, settings, strategies as st

from conftest import load
from ntprover.accel import accelerate, accelerate_sequence, extract_shape
from ntprover.experiments import AccelReport, check_acceleration, closure_upto, random_loop
from ntprover.logic import Poly, conj, lit, sip_of, substitute
from ntprover.smt import Answer, SmtClient
from ntprover.ts import FreshNames, Location, Transition, enumerate_relation
from test_smt import FAKE

x, y, z = Poly.var("x"), Poly.var("y"), Poly.var("z")
xp, yp, zp = Poly.var("x'"), Poly.var("y'"), Poly.var("z'")
L = Location("l")
V = ("x", "y", "z")


def loop(*parts):
    return Transition(0, L, L, conj(*parts))


def example_loops():
    t = load("example1.its").transitions[1]
    below = t.with_cond(sip_of(t.cond, {"x": 0, "y": 1, "z": 5, "x'": 1, "y'": 1, "z'": 5}))
    above = t.with_cond(sip_of(t.cond, {"x": 5, "y": 1, "z": 5, "x'": 6, "y'": 2, "z'": 5}))
    return below, above


def test_shape_of_example_loop():
    below, _ = example_loops()
    shape = extract_shape(below, V)
    assert shape.increments == (("x", 1), ("y", 0), ("z", 0))
    assert set(shape.guards) == {lit(y, "<=", 2 * z), lit(x, "<", z)}


def test_shape_rejects_swap():
    assert extract_shape(Transition(0, L, L, conj(lit(xp, "=", y), lit(yp, "=", x))), ("x", "y")) is None


def test_shape_identity():
    shape = extract_shape(loop(lit(xp, "=", x)), ("x",))
    assert shape.increments == (("x", 0),) and shape.guards == ()


def test_shape_rejects_havoc_and_conflicts():
    assert extract_shape(loop(lit(xp, "=", x + 1)), ("x", "y")) is None
    assert extract_shape(loop(lit(xp, "=", x + 1), lit(xp, "=", x + 2)), ("x",)) is None
    assert extract_shape(loop(lit(xp, "=", x + 1), lit(xp, ">", 0)), ("x",)) is None


def test_accelerate_below(smt):
    below, _ = example_loops()
    acc = accelerate(below, V, smt, FreshNames())
    n = Poly.var(acc.param)
    want = conj(lit(y, "<=", 2 * z), lit(n, ">", 0), lit(xp, "=", x + n), lit(x + n, "<=", z),
                lit(yp, "=", y), lit(zp, "=", z))
    assert smt.equivalent(acc.cond, want) is Answer.YES


def test_accelerate_above(smt):
    _, above = example_loops()
    acc = accelerate(above, V, smt, FreshNames())
    n = Poly.var(acc.param)
    want = conj(lit(y + n - 1, "<=", 2 * z), lit(n, ">", 0), lit(xp, "=", x + n), lit(x, ">=", z),
                lit(yp, "=", y + n), lit(zp, "=", z))
    assert smt.equivalent(acc.cond, want) is Answer.YES


def test_accelerate_identity(smt):
    t = loop(lit(xp, "=", x))
    acc = accelerate(t, ("x",), smt, FreshNames())
    assert acc is not None
    learned = Transition(1, L, L, acc.cond)
    assert enumerate_relation(learned, 3, ("x",), aux_domains={acc.param: range(1, 5)}) == \
        enumerate_relation(t, 3, ("x",))


def test_accelerate_fails_on_oscillating_guard(smt):
    # x = y toggles along y' = y - 1
    t = Transition(0, L, L, conj(lit(x, "=", y), lit(xp, "=", x), lit(yp, "=", y - 1)))
    assert accelerate(t, ("x", "y"), smt, FreshNames()) is None


def test_unknown_means_failure():
    t = loop(lit(x, ">", 0), lit(xp, "=", x - 1))
    with SmtClient(f"{FAKE} unknown") as s:
        assert accelerate(t, ("x",), s, FreshNames()) is None


def test_sequence(smt):
    a = Transition(0, L, L, conj(lit(x, "<", 10), lit(xp, "=", x + 1)))
    b = Transition(1, L, L, conj(lit(xp, "=", x + 1)))
    acc = accelerate_sequence([a, b], ("x",), smt, FreshNames())
    n = Poly.var(acc.param)
    assert smt.equivalent(acc.cond, conj(lit(n, ">", 0), lit(xp, "=", x + 2 * n), lit(x + 2 * n - 2, "<", 10))) \
        is Answer.YES


def test_sequence_outside_class(smt):
    ts = load("example5.its")
    t = ts.transitions
    assert accelerate_sequence([t[1], t[2]], ts.variables, smt, FreshNames()) is None


def test_unshifted_guard_at_one_step(smt):
    below, above = example_loops()
    fresh = FreshNames()
    for t in (below, above):
        acc = accelerate(t, V, smt, fresh)
        one = substitute(acc.cond, {acc.param: Poly.const(1)})
        assert smt.equivalent(one, t.cond) is Answer.YES
        assert smt.entails(acc.cond, lit(Poly.var(acc.param), ">", 0)) is Answer.YES


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_exact_on_bounded_domain(smt, seed):
    report = AccelReport()
    check_acceleration(random_loop(random.Random(seed), V), V, smt, FreshNames(), report)
    assert report.ok, report.mismatches


def test_oracle_catches_unshifted_decreasing_guard(smt):
    # negative control: dropping the n-1 shift must be visible to the oracle
    t = loop(lit(x, "<", 2), lit(xp, "=", x + 1), lit(yp, "=", y), lit(zp, "=", z))
    acc = accelerate(t, V, smt, FreshNames())
    n = Poly.var(acc.param)
    wrong = conj(lit(n, ">", 0), lit(xp, "=", x + n), lit(yp, "=", y), lit(zp, "=", z), lit(x, "<", 2))
    dom = {acc.param: range(1, 5)}
    truth = closure_upto(enumerate_relation(t, 3, V), 4)
    assert enumerate_relation(Transition(1, L, L, acc.cond), 3, V, aux_domains=dom) == truth
    assert enumerate_relation(Transition(1, L, L, wrong), 3, V, aux_domains=dom) != truth
