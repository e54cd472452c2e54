import itertools

import pytest
from hypothesis import given, strategies as st

from conftest import VARS3, atoms, formulas
from ntprover.logic import (
    FALSE,
    TRUE,
    And,
    Lit,
    MissingVariableError,
    Not,
    NotAModelError,
    Or,
    Poly,
    conj,
    disj,
    eliminate,
    evaluate,
    is_conjunctive,
    lit,
    literals,
    negate,
    nnf,
    render,
    sip_of,
    substitute,
    variables,
)

x, y, z = Poly.var("x"), Poly.var("y"), Poly.var("z")
xp, yp = Poly.var("x'"), Poly.var("y'")
BOX3 = [dict(zip(VARS3, v)) for v in itertools.product(range(-2, 3), repeat=3)]


def is_nnf(f):
    if isinstance(f, Not):
        return False
    if isinstance(f, (And, Or)):
        return all(a not in (TRUE, FALSE) and is_nnf(a) for a in f.args)
    return True


raw = st.recursive(
    atoms(),
    lambda kids: st.one_of(
        st.lists(kids, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(kids, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
        kids.map(Not),
    ),
    max_leaves=6,
)


class TestPoly:
    def test_canonical_form(self):
        assert x + y == y + x
        assert (x - x).terms == ()
        assert (x * y + 2).terms[-1] == ((), 2)

    def test_linear_coefficient(self):
        assert (3 * x + y).linear_coefficient("x") == 3
        assert (x * y + x).linear_coefficient("x") is None

    def test_evaluate_missing(self):
        with pytest.raises(MissingVariableError):
            (x + y).evaluate({"x": 1})


class TestLiterals:
    def test_ge_and_gt_normalized(self):
        assert lit(x, ">=", 0) == Lit(-x, "<=")
        assert lit(x, ">", y) == Lit(y - x, "<")

    def test_constant_literals_fold(self):
        assert lit(3, "=", 3) == TRUE
        assert lit(1, "<", 0) == FALSE

    def test_equality_orientation(self):
        assert lit(x, "=", y) == lit(y, "=", x)

    def test_negation_closed(self):
        assert negate(lit(x, "<=", 0)) == Lit(-x, "<")
        assert negate(lit(x, "=", 0)) == Lit(x, "!=")
        assert negate(negate(lit(x, "<", y))) == lit(x, "<", y)


class TestNnf:
    def test_de_morgan(self):
        f = Not(Or((lit(x, "<=", 0), lit(y, "=", 1))))
        assert nnf(f) == conj(lit(-x, "<", 0), lit(y, "!=", 1))

    def test_double_negation(self):
        assert nnf(Not(Not(lit(x, "=", 0)))) == lit(x, "=", 0)

    @given(raw)
    def test_equivalent_idempotent_and_normal(self, f):
        g = nnf(f)
        assert is_nnf(g)
        assert nnf(g) == g
        assert all(evaluate(f, m) == evaluate(g, m) for m in BOX3)


class TestBooleanStructure:
    def test_constants_stay_at_root(self):
        a = lit(x, "<", 0)
        assert conj(a, TRUE) == a
        assert conj(a, FALSE) == FALSE
        assert disj(a, TRUE) == TRUE
        assert conj() == TRUE and disj() == FALSE

    def test_flatten_and_dedupe(self):
        a, b = lit(x, "<", 0), lit(y, "<", 0)
        assert conj(a, conj(a, b)) == And((a, b))

    def test_is_conjunctive(self):
        a, b = lit(x, "<", 0), lit(y, "<", 0)
        assert is_conjunctive(conj(a, b)) and is_conjunctive(TRUE)
        assert not is_conjunctive(disj(a, b))


class TestSubstituteEvaluate:
    def test_ground_substitution(self):
        f = lit(xp, "=", x + 1)
        assert substitute(f, {"x": Poly.const(3), "x'": Poly.const(4)}) == TRUE

    def test_identity_substitution(self):
        f = conj(lit(xp, "=", x + 1), lit(y, "<", z))
        assert substitute(f, {v: Poly.var(v) for v in variables(f)}) == f

    def test_chaining_construction(self):
        mid = Poly.var("x#0")
        f = conj(substitute(lit(xp, "=", x + 1), {"x'": mid}), substitute(lit(xp, "=", x - 1), {"x": mid}))
        assert f == conj(lit(mid, "=", x + 1), lit(xp, "=", mid - 1))

    def test_simultaneous(self):
        f = lit(x, "<", y)
        assert substitute(f, {"x": y, "y": x}) == lit(y, "<", x)

    def test_unconstrained_post_configuration(self):
        # (4,4,4) -> (4,3,7) under the l2 equality loop; z' is unconstrained
        f = conj(lit(x, "=", y), lit(x, ">", 0), lit(xp, "=", x), lit(yp, "=", y - 1))
        assert evaluate(f, {"x": 4, "y": 4, "x'": 4, "y'": 3})

    def test_false(self):
        assert not evaluate(FALSE, {})

    def test_disjunction(self):
        f = disj(conj(lit(x, "<", z), lit(yp, "=", y)), conj(lit(x, ">=", z), lit(yp, "=", y + 1)))
        assert evaluate(f, {"x": 0, "z": 5, "y": 1, "y'": 1})

    def test_missing_variable(self):
        with pytest.raises(MissingVariableError):
            evaluate(lit(x, "<", y), {"x": 0})


class TestSip:
    def test_keeps_all_satisfied_literals(self):
        X = Poly.var("X")
        f = conj(lit(X, ">", 0), lit(X, ">", 1))
        assert sip_of(f, {"X": 2}) == f

    def test_disjunct_selection(self):
        f = disj(conj(lit(x, "<", z), lit(yp, "=", y)), conj(lit(x, ">=", z), lit(yp, "=", y + 1)))
        assert sip_of(f, {"x": 0, "z": 5, "y": 1, "y'": 1}) == conj(lit(x, "<", z), lit(yp, "=", y))

    def test_true(self):
        assert sip_of(TRUE, {}) == TRUE

    def test_not_a_model(self):
        with pytest.raises(NotAModelError):
            sip_of(lit(x, "<", 0), {"x": 1})

    @given(formulas(), st.sampled_from(BOX3))
    def test_properties(self, f, m):
        if not evaluate(f, m):
            return
        s = sip_of(f, m)
        assert evaluate(s, m)
        assert set(literals(s)) <= set(literals(f))
        assert all(evaluate(f, n) for n in BOX3 if evaluate(s, n))

    @given(formulas())
    def test_disjunctive_completeness(self, f):
        models = [m for m in BOX3 if evaluate(f, m)]
        sips = {sip_of(f, m) for m in models}
        assert [m for m in BOX3 if any(evaluate(s, m) for s in sips)] == models


class TestEliminate:
    def test_defined_variable(self):
        n = Poly.var("x#1")
        f, rest = eliminate(conj(lit(n, "=", x + 1), lit(xp, "=", n + 1)), ["x#1"])
        assert f == lit(xp, "=", x + 2) and not rest

    def test_undefined_variable_remains(self):
        n = Poly.var("n#1")
        f, rest = eliminate(conj(lit(n, ">", 0), lit(xp, "=", x + 2 * n)), ["n#1"])
        assert rest == {"n#1"}

    @given(formulas(("x", "y", "x#0")))
    def test_equisatisfiable(self, f):
        g, rest = eliminate(f, ["x#0"])
        if rest:
            return
        assert "x#0" not in variables(g)
        for a, b in itertools.product(range(-2, 3), repeat=2):
            m = {"x": a, "y": b}
            direct = any(evaluate(f, {**m, "x#0": c}) for c in range(-12, 13))
            assert evaluate(g, m) == direct


def test_render_readable():
    assert render(lit(xp, "=", x + 1)) == "x' = x + 1"
    assert render(lit(Poly.var("z'"), ">=", 5000)) == "z' >= 5000"
