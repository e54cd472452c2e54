"""Certificates of non-termination for conjunctive recursive transitions.

A certificate is a satisfiable formula over the pre variables from which the
loop can run forever.  Two shapes are checked:

* a point (every variable fixed) that the loop can map to itself, and
* a set closed under the loop (recurrence) from which a step is always
  possible (progress).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .accel import eliminate_mids
from .logic import (
    TRUE,
    Formula,
    Lit,
    Poly,
    conj,
    conjuncts,
    evaluate,
    is_conjunctive,
    lit,
    literals,
    prime,
    rename,
    substitute,
    variables,
)
from .smt import Answer, SmtClient
from .ts import FreshNames, Transition, aux_vars, chain_seq

FIXED_POINT = "fixed-point"
RECURRENT_GUARD = "recurrent-guard"


@dataclass(frozen=True)
class Certificate:
    psi: Formula
    technique: str
    source: tuple[int, ...]
    transition: Transition  # the chained loop that psi certifies


def _point(psi: Formula, variables_: Sequence[str]) -> dict[str, int] | None:
    """The unique state described by ``psi`` if it is a conjunction ``x = c``."""
    values: dict[str, int] = {}
    for l in conjuncts(psi):
        if not isinstance(l, Lit) or l.rel != "=" or l.poly.degree() != 1 or len(l.poly.variables()) != 1:
            return None
        (x,) = l.poly.variables()
        a = l.poly.linear_coefficient(x)
        if a not in (1, -1):
            return None
        values[x] = -l.poly.const_value() * a
    return values if set(values) == set(variables_) else None


def _point_formula(values: dict[str, int], variables_: Sequence[str]) -> Formula:
    return conj(*(lit(Poly.var(x), "=", values[x]) for x in variables_))


def _to_post(psi: Formula, variables_: Sequence[str]) -> Formula:
    return rename(psi, {x: prime(x) for x in variables_})


def check_certificate(psi: Formula, t: Transition, variables_: Sequence[str], smt: SmtClient) -> bool:
    if not t.recursive or not variables(psi) <= set(variables_):
        return False
    if not smt.check_sat(psi).sat:
        return False
    if _point(psi, variables_) is not None:
        return smt.check_sat(conj(psi, t.cond, _to_post(psi, variables_))).sat
    if smt.entails(conj(psi, t.cond), _to_post(psi, variables_)) is not Answer.YES:
        return False
    hidden = {prime(x) for x in variables_} | aux_vars(t)
    return smt.entails(psi, t.cond, hidden) is Answer.YES


def certify_fixed_point(t: Transition, variables_: Sequence[str], smt: SmtClient,
                        context: Formula = TRUE, source: tuple[int, ...] = ()) -> Certificate | None:
    """Look for a state the loop can map to itself.

    ``context`` constrains the pre variables further (e.g. to states reachable
    at the start of the loop); it only steers the search.
    """
    stay = conj(*(lit(Poly.var(prime(x)), "=", Poly.var(x)) for x in variables_))
    res = smt.check_sat(conj(t.cond, stay, context))
    if not res.sat:
        return None
    psi = _point_formula(res.model, variables_)
    if not check_certificate(psi, t, variables_, smt):
        return None
    return Certificate(psi, FIXED_POINT, source, t)


def certify_recurrent_guard(t: Transition, variables_: Sequence[str], smt: SmtClient,
                            source: tuple[int, ...] = ()) -> Certificate | None:
    pre = set(variables_)
    psi = conj(*(l for l in literals(t.cond) if l.poly.variables() <= pre))
    if not check_certificate(psi, t, variables_, smt):
        return None
    return Certificate(psi, RECURRENT_GUARD, source, t)


def loop_of(suffix: Sequence[Transition], variables_: Sequence[str], fresh: FreshNames) -> Transition:
    return eliminate_mids(chain_seq(suffix, variables_, fresh))


def certify_loop(loop: Transition, variables_: Sequence[str], smt: SmtClient, source: tuple[int, ...],
                 context: Formula = TRUE) -> Certificate | None:
    if not loop.recursive or not is_conjunctive(loop.cond):
        return None
    return (certify_fixed_point(loop, variables_, smt, context, source)
            or certify_recurrent_guard(loop, variables_, smt, source))


def certify(suffix: Sequence[Transition], variables_: Sequence[str], smt: SmtClient, fresh: FreshNames,
            context: Formula = TRUE) -> Certificate | None:
    loop = loop_of(suffix, variables_, fresh)
    return certify_loop(loop, variables_, smt, tuple(t.id for t in suffix), context)


def simulate(cert: Certificate, start: dict[str, int], steps: int, variables_: Sequence[str],
             smt: SmtClient) -> list[dict[str, int]] | None:
    """Run the certified loop concretely for ``steps`` steps inside ``psi``.

    Every step is re-checked by ground evaluation; ``None`` means the run got
    stuck or left the certificate set.
    """
    t = cert.transition
    state = {x: start[x] for x in variables_}
    if not evaluate(cert.psi, state):
        return None
    run = [state]
    for _ in range(steps):
        fixed = {x: Poly.const(v) for x, v in state.items()}
        res = smt.check_sat(conj(substitute(t.cond, fixed), _to_post(cert.psi, variables_)))
        if not res.sat:
            return None
        nxt = {x: res.model.get(prime(x), 0) for x in variables_}
        full = dict(res.model)
        full.update(state)
        full.update({prime(x): v for x, v in nxt.items()})
        full.update({v: 0 for v in aux_vars(t) if v not in full})
        if not evaluate(t.cond, full) or not evaluate(cert.psi, nxt):
            return None
        state = nxt
        run.append(state)
    return run


__all__ = [
    "Certificate",
    "FIXED_POINT",
    "RECURRENT_GUARD",
    "certify",
    "certify_fixed_point",
    "certify_loop",
    "certify_recurrent_guard",
    "check_certificate",
    "loop_of",
    "simulate",
]
