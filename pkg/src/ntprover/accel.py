"""Acceleration of conjunctive loops with constant increments.

A loop ``x' = x + c /\\ G(x)`` iterated ``n`` times is ``x' = x + n*c`` provided
every guard holds at ``x, x + c, ..., x + (n-1)*c``.  A guard whose truth can
only be lost along the orbit (``g(x+c) -> g(x)``) is checked at the last
iteration; one whose truth can only be gained (``g(x) -> g(x+c)``) is checked
at the first.  Anything else makes acceleration fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .logic import FALSE, Formula, Lit, Poly, conj, conjuncts, eliminate, is_aux, is_conjunctive, lit, prime, substitute
from .smt import Answer, SmtClient
from .ts import FreshNames, Provenance, Transition, aux_vars, chain_seq


@dataclass(frozen=True)
class UpdateShape:
    increments: tuple[tuple[str, int], ...]
    guards: tuple[Lit, ...]

    def shift(self, k: Poly | int) -> dict[str, Poly]:
        """Substitution moving every variable ``k`` iterations forward."""
        k = k if isinstance(k, Poly) else Poly.const(k)
        return {x: Poly.var(x) + k * c for x, c in self.increments if c}


@dataclass(frozen=True)
class AcceleratedTransition:
    base: Transition
    param: str
    cond: Formula

    def to_transition(self, tid: int, sources: tuple[int, ...]) -> Transition:
        return Transition(tid, self.base.src, self.base.dst, self.cond, Provenance("accelerated", sources))


def _increment(l: Lit, variables_: Sequence[str]) -> tuple[str, int] | None:
    """``(x, c)`` if ``l`` is ``x' = x + c``."""
    if l.rel != "=" or l.poly.degree() != 1:
        return None
    posts = [v for v in l.poly.variables() if v.endswith("'")]
    if len(posts) != 1:
        return None
    xp = posts[0]
    x = xp[:-1]
    if x not in variables_ or l.poly.variables() - {x, xp}:
        return None
    a = l.poly.linear_coefficient(xp)
    if a not in (1, -1) or l.poly.linear_coefficient(x) != -a:
        return None
    # a*(x' - x) + k = 0
    return x, -l.poly.const_value() * a


def extract_shape(t: Transition, variables_: Sequence[str]) -> UpdateShape | None:
    if not t.recursive or not is_conjunctive(t.cond) or t.cond == FALSE:
        return None
    incs: dict[str, int] = {}
    guards: list[Lit] = []
    posts = {prime(x) for x in variables_}
    for l in conjuncts(t.cond):
        vs = l.poly.variables()
        if any(is_aux(v) for v in vs):
            return None
        if vs & posts:
            inc = _increment(l, variables_)
            if inc is None:
                return None
            x, c = inc
            if incs.get(x, c) != c:
                return None
            incs[x] = c
        else:
            guards.append(l)
    if set(incs) != set(variables_):
        return None
    return UpdateShape(tuple((x, incs[x]) for x in variables_), tuple(guards))


def accelerate(t: Transition, variables_: Sequence[str], smt: SmtClient,
               fresh: FreshNames) -> AcceleratedTransition | None:
    shape = extract_shape(t, variables_)
    if shape is None:
        return None
    step = shape.shift(1)
    n = fresh("n")
    last = shape.shift(Poly.var(n) - 1)
    kept: list[Formula] = []
    for g in shape.guards:
        g1 = substitute(g, step)
        if g1 == g:
            kept.append(g)
        elif smt.entails(g1, g) is Answer.YES:
            kept.append(substitute(g, last))
        elif smt.entails(g, g1) is Answer.YES:
            kept.append(g)
        else:
            return None
    updates = [lit(Poly.var(prime(x)), "=", Poly.var(x) + Poly.var(n) * c) for x, c in shape.increments]
    cond = conj(lit(Poly.var(n), ">", 0), *updates, *kept)
    return AcceleratedTransition(t, n, cond)


def eliminate_mids(t: Transition) -> Transition:
    """Drop auxiliaries of a chained transition that are defined by equations."""
    cond, _ = eliminate(t.cond, sorted(aux_vars(t)))
    return t.with_cond(cond)


def accelerate_sequence(seq: Sequence[Transition], variables_: Sequence[str], smt: SmtClient,
                        fresh: FreshNames) -> AcceleratedTransition | None:
    chained = eliminate_mids(chain_seq(seq, variables_, fresh))
    if not chained.recursive:
        return None
    return accelerate(chained, variables_, smt, fresh)


__all__ = [
    "AcceleratedTransition",
    "UpdateShape",
    "accelerate",
    "accelerate_sequence",
    "eliminate_mids",
    "extract_shape",
]
