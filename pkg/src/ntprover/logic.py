"""Quantifier-free integer formulas in negation normal form.

Terms are polynomials with integer coefficients; literals are normalized to
``poly REL 0`` with ``REL`` one of ``=``, ``!=``, ``<=``, ``<``.  Formulas are
built with the smart constructors :func:`conj`, :func:`disj` and :func:`lit`,
which keep ``TRUE``/``FALSE`` out of the interior of the tree.

Variables are plain strings.  Program variables are identifiers (``x``), post
variables carry a trailing prime (``x'``) and auxiliary variables contain a
``#`` (``n#3``).  Depth-indexed copies used by the engine contain an ``@``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

Monomial = tuple[str, ...]
Model = dict[str, int]


class MissingVariableError(KeyError):
    """A model does not assign a variable that the formula mentions."""


class NotAModelError(ValueError):
    """sip_of was called with an assignment that does not satisfy the formula."""


def prime(name: str) -> str:
    return name + "'"


def is_aux(name: str) -> bool:
    return "#" in name


def _mono_key(m: Monomial):
    return (len(m) == 0, m)


@dataclass(frozen=True)
class Poly:
    """Polynomial in canonical form: monomials sorted, zero coefficients dropped."""

    terms: tuple[tuple[Monomial, int], ...] = ()

    @staticmethod
    def _make(acc: Mapping[Monomial, int]) -> "Poly":
        items = [(m, c) for m, c in acc.items() if c != 0]
        items.sort(key=lambda mc: _mono_key(mc[0]))
        return Poly(tuple(items))

    @staticmethod
    def const(c: int) -> "Poly":
        return Poly((((), c),)) if c else Poly()

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly((((name,), 1),))

    def __add__(self, other: "Poly | int") -> "Poly":
        other = _as_poly(other)
        acc = dict(self.terms)
        for m, c in other.terms:
            acc[m] = acc.get(m, 0) + c
        return Poly._make(acc)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(tuple((m, -c) for m, c in self.terms))

    def __sub__(self, other: "Poly | int") -> "Poly":
        return self + (-_as_poly(other))

    def __rsub__(self, other: "Poly | int") -> "Poly":
        return _as_poly(other) - self

    def __mul__(self, other: "Poly | int") -> "Poly":
        other = _as_poly(other)
        acc: dict[Monomial, int] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = tuple(sorted(m1 + m2))
                acc[m] = acc.get(m, 0) + c1 * c2
        return Poly._make(acc)

    __rmul__ = __mul__

    def is_const(self) -> bool:
        return all(not m for m, _ in self.terms)

    def const_value(self) -> int:
        for m, c in self.terms:
            if not m:
                return c
        return 0

    def variables(self) -> frozenset[str]:
        return frozenset(v for m, _ in self.terms for v in m)

    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    def linear_coefficient(self, v: str) -> int | None:
        """Coefficient of ``v`` if ``v`` occurs only in the monomial ``v``, else None."""
        coef = None
        for m, c in self.terms:
            if v in m:
                if m != (v,):
                    return None
                coef = c
        return coef

    def evaluate(self, model: Mapping[str, int]) -> int:
        total = 0
        for m, c in self.terms:
            val = c
            for v in m:
                try:
                    val *= model[v]
                except KeyError:
                    raise MissingVariableError(v) from None
            total += val
        return total

    def substitute(self, mapping: Mapping[str, "Poly"]) -> "Poly":
        if not any(v in mapping for v in self.variables()):
            return self
        result = Poly()
        for m, c in self.terms:
            term = Poly.const(c)
            for v in m:
                term = term * (mapping[v] if v in mapping else Poly.var(v))
            result = result + term
        return result

    def partial_evaluate(self, model: Mapping[str, int]) -> "Poly":
        return self.substitute({v: Poly.const(model[v]) for v in self.variables() if v in model})

    def __str__(self) -> str:
        return render_poly(self)


def _as_poly(x: "Poly | int") -> Poly:
    return x if isinstance(x, Poly) else Poly.const(x)


def _render_mono(m: Monomial, c: int) -> str:
    if not m:
        return str(c)
    body = "*".join(m)
    return body if c == 1 else f"{c}*{body}"


def render_poly(p: Poly) -> str:
    if not p.terms:
        return "0"
    out = ""
    for i, (m, c) in enumerate(p.terms):
        if i == 0:
            out = ("-" + _render_mono(m, -c)) if c < 0 else _render_mono(m, c)
        else:
            out += (" - " + _render_mono(m, -c)) if c < 0 else (" + " + _render_mono(m, c))
    return out


# --------------------------------------------------------------------------
# Formulas


class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)

    def __invert__(self) -> "Formula":
        return negate(self)

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, repr=False)
class _Const(Formula):
    value: bool

    def __repr__(self) -> str:
        return "TRUE" if self.value else "FALSE"


TRUE = _Const(True)
FALSE = _Const(False)

RELS = ("=", "!=", "<=", "<")
_NEG_REL = {"=": "!=", "!=": "="}


@dataclass(frozen=True)
class Lit(Formula):
    """``poly rel 0``."""

    poly: Poly
    rel: str

    def holds(self, model: Mapping[str, int]) -> bool:
        v = self.poly.evaluate(model)
        if self.rel == "=":
            return v == 0
        if self.rel == "!=":
            return v != 0
        if self.rel == "<=":
            return v <= 0
        return v < 0


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    """Raw negation; only appears before :func:`nnf` has been applied."""

    arg: Formula


def _orient_eq(p: Poly) -> Poly:
    for m, c in p.terms:
        if m:
            return p if c > 0 else -p
    return p


def make_lit(poly: Poly, rel: str) -> Formula:
    """Normalized literal ``poly rel 0``; constant literals fold to TRUE/FALSE."""
    if rel == ">=":
        poly, rel = -poly, "<="
    elif rel == ">":
        poly, rel = -poly, "<"
    if rel not in RELS:
        raise ValueError(f"unknown relation {rel!r}")
    if poly.is_const():
        v = poly.const_value()
        ok = {"=": v == 0, "!=": v != 0, "<=": v <= 0, "<": v < 0}[rel]
        return TRUE if ok else FALSE
    if rel in ("=", "!="):
        poly = _orient_eq(poly)
    return Lit(poly, rel)


def lit(lhs: "Poly | int", rel: str, rhs: "Poly | int" = 0) -> Formula:
    return make_lit(_as_poly(lhs) - _as_poly(rhs), rel)


def _flatten(args: Iterable[Formula], cls) -> Iterator[Formula]:
    for a in args:
        if isinstance(a, cls):
            yield from a.args
        else:
            yield a


def _dedupe(args: Iterable[Formula]) -> list[Formula]:
    seen: set[Formula] = set()
    out = []
    for a in args:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


def conj(*args: Formula) -> Formula:
    if len(args) == 1 and not isinstance(args[0], Formula):
        args = tuple(args[0])  # type: ignore[assignment]
    kept = []
    for a in _flatten(args, And):
        if a is FALSE or a == FALSE:
            return FALSE
        if a is TRUE or a == TRUE:
            continue
        kept.append(a)
    kept = _dedupe(kept)
    if not kept:
        return TRUE
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept))


def disj(*args: Formula) -> Formula:
    if len(args) == 1 and not isinstance(args[0], Formula):
        args = tuple(args[0])  # type: ignore[assignment]
    kept = []
    for a in _flatten(args, Or):
        if a == TRUE:
            return TRUE
        if a == FALSE:
            continue
        kept.append(a)
    kept = _dedupe(kept)
    if not kept:
        return FALSE
    if len(kept) == 1:
        return kept[0]
    return Or(tuple(kept))


def negate_lit(l: Lit) -> Formula:
    if l.rel in _NEG_REL:
        return make_lit(l.poly, _NEG_REL[l.rel])
    # not (p <= 0)  <=>  -p < 0 ;  not (p < 0)  <=>  -p <= 0
    return make_lit(-l.poly, "<" if l.rel == "<=" else "<=")


def negate(f: Formula) -> Formula:
    """NNF negation."""
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, Lit):
        return negate_lit(f)
    if isinstance(f, And):
        return disj(*(negate(a) for a in f.args))
    if isinstance(f, Or):
        return conj(*(negate(a) for a in f.args))
    if isinstance(f, Not):
        return nnf(f.arg)
    raise TypeError(f)


def nnf(f: Formula) -> Formula:
    if isinstance(f, Not):
        return negate(nnf(f.arg))
    if isinstance(f, And):
        return conj(*(nnf(a) for a in f.args))
    if isinstance(f, Or):
        return disj(*(nnf(a) for a in f.args))
    return f


def literals(f: Formula) -> list[Lit]:
    """Literals in order of first occurrence, without duplicates."""
    out: list[Lit] = []
    seen: set[Lit] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Lit):
            if g not in seen:
                seen.add(g)
                out.append(g)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)
        elif isinstance(g, Not):
            walk(g.arg)

    walk(f)
    return out


def variables(f: Formula) -> frozenset[str]:
    vs: set[str] = set()
    for l in literals(f):
        vs |= l.poly.variables()
    return frozenset(vs)


def is_conjunctive(f: Formula) -> bool:
    if isinstance(f, (Lit, _Const)):
        return True
    return isinstance(f, And) and all(isinstance(a, Lit) for a in f.args)


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    if f == TRUE:
        return ()
    if isinstance(f, And):
        return f.args
    return (f,)


def substitute(f: Formula, mapping: Mapping[str, Poly]) -> Formula:
    """Simultaneous substitution of variables by polynomials."""
    if isinstance(f, Lit):
        return make_lit(f.poly.substitute(mapping), f.rel)
    if isinstance(f, And):
        return conj(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return disj(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    return f


def rename(f: Formula, mapping: Mapping[str, str]) -> Formula:
    return substitute(f, {k: Poly.var(v) for k, v in mapping.items()})


def evaluate(f: Formula, model: Mapping[str, int]) -> bool:
    if isinstance(f, Lit):
        return f.holds(model)
    if isinstance(f, And):
        return all(evaluate(a, model) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, model) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, model)
    return f.value  # type: ignore[attr-defined]


def sip_of(f: Formula, model: Mapping[str, int]) -> Formula:
    """Conjunction of exactly those literals of ``f`` that ``model`` satisfies."""
    if not evaluate(f, model):
        raise NotAModelError("assignment does not satisfy the formula")
    return conj(*(l for l in literals(f) if l.holds(model)))


def eliminate(f: Formula, candidates: Iterable[str]) -> tuple[Formula, frozenset[str]]:
    """Existentially eliminate ``candidates`` that are defined by a top-level equation.

    A variable ``v`` is eliminated when some top-level conjunct is ``c*v + t = 0``
    with ``c = +-1`` and ``v`` not in ``t``; then ``exists v. f`` is ``f[v := -t/c]``.
    Returns the resulting formula and the candidates that could not be eliminated
    (restricted to those still occurring).
    """
    pending = set(candidates)
    changed = True
    while changed and pending:
        changed = False
        for g in conjuncts(f):
            if not (isinstance(g, Lit) and g.rel == "="):
                continue
            for v in sorted(pending & g.poly.variables()):
                c = g.poly.linear_coefficient(v)
                if c not in (1, -1):
                    continue
                rest = g.poly - Poly.var(v) * c
                solution = rest * (-c)
                others = [h for h in conjuncts(f) if h is not g]
                f = substitute(conj(*others), {v: solution})
                pending.discard(v)
                changed = True
                break
            if changed:
                break
    return f, frozenset(pending & variables(f))


# --------------------------------------------------------------------------
# Rendering (native ``.its`` syntax)

_FLIP = {"<=": ">=", "<": ">", "=": "=", "!=": "!="}


def render_lit(l: Lit) -> str:
    p = l.poly
    if l.rel in ("=", "!="):
        for m, c in p.terms:
            if len(m) == 1 and m[0].endswith("'") and p.linear_coefficient(m[0]) in (1, -1):
                v = m[0]
                rhs = (p - Poly.var(v) * c) * (-c)
                return f"{v} {l.rel} {render_poly(rhs)}"
    pos = Poly(tuple((m, c) for m, c in p.terms if c > 0))
    neg = Poly(tuple((m, -c) for m, c in p.terms if c < 0))
    if not pos.terms or (pos.is_const() and not neg.is_const()):
        return f"{render_poly(neg)} {_FLIP[l.rel]} {render_poly(pos)}"
    return f"{render_poly(pos)} {l.rel} {render_poly(neg)}"


def render(f: Formula) -> str:
    if f == TRUE:
        return "true"
    if f == FALSE:
        return "false"
    if isinstance(f, Lit):
        return render_lit(f)
    if isinstance(f, And):
        return " && ".join(f"({render(a)})" if isinstance(a, Or) else render(a) for a in f.args)
    if isinstance(f, Or):
        return " || ".join(f"({render(a)})" if isinstance(a, And) else render(a) for a in f.args)
    if isinstance(f, Not):
        return f"!({render(f.arg)})"
    raise TypeError(f)
