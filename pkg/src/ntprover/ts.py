"""Transition systems, chaining and a bounded relation oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .logic import (
    FALSE,
    And,
    Or,
    Formula,
    Lit,
    conj,
    conjuncts,
    evaluate,
    is_aux,
    prime,
    rename,
    variables,
)

INIT, ERR, PLAIN = "init", "err", "plain"
ERR_NAME = "err"


@dataclass(frozen=True)
class Location:
    name: str
    kind: str = PLAIN

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Provenance:
    """How a transition came to be.

    kind is one of ``original``, ``sip``, ``accelerated``, ``nonterm``; ``sources``
    lists the store ids it was derived from (the parent for ``sip``).
    """

    kind: str = "original"
    sources: tuple[int, ...] = ()

    def __str__(self) -> str:
        if self.kind == "original":
            return "original"
        return f"{self.kind}({', '.join(f'#{s}' for s in self.sources)})"


@dataclass(frozen=True)
class Transition:
    id: int
    src: Location
    dst: Location
    cond: Formula
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def recursive(self) -> bool:
        return self.src == self.dst

    @property
    def initial(self) -> bool:
        return self.src.kind == INIT

    @property
    def safe(self) -> bool:
        return self.dst.kind != ERR

    def with_cond(self, cond: Formula, **kw) -> "Transition":
        return replace(self, cond=cond, **kw)

    def __str__(self) -> str:
        return f"{self.src} -> {self.dst} [{self.cond}]"


@dataclass(frozen=True)
class TransitionSystem:
    variables: tuple[str, ...]
    init: str
    transitions: tuple[Transition, ...]

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def locations(self) -> tuple[Location, ...]:
        seen: dict[str, Location] = {self.init: Location(self.init, INIT)}
        for t in self.transitions:
            for loc in (t.src, t.dst):
                seen.setdefault(loc.name, loc)
        return tuple(seen.values())

    def location(self, name: str) -> Location:
        if name == self.init:
            return Location(name, INIT)
        if name == ERR_NAME:
            return Location(name, ERR)
        return Location(name, PLAIN)

    def by_id(self, tid: int) -> Transition:
        for t in self.transitions:
            if t.id == tid:
                return t
        raise KeyError(tid)


class FreshNames:
    """Deterministic supply of auxiliary variable names (``base#k``)."""

    def __init__(self, start: int = 0):
        self._counter = itertools.count(start)

    def __call__(self, base: str) -> str:
        base = base.split("#", 1)[0].rstrip("'").split("@", 1)[0]
        return f"{base}#{next(self._counter)}"


_default_fresh = FreshNames()


def aux_vars(t: Transition | Formula) -> frozenset[str]:
    cond = t.cond if isinstance(t, Transition) else t
    return frozenset(v for v in variables(cond) if is_aux(v))


def rename_aux_apart(t: Transition, avoid: Iterable[str], fresh: FreshNames) -> Transition:
    clash = aux_vars(t) & set(avoid)
    if not clash:
        return t
    return t.with_cond(rename(t.cond, {v: fresh(v) for v in sorted(clash)}))


def chain(t1: Transition, t2: Transition, variables_: Sequence[str], fresh: FreshNames | None = None,
          tid: int = -1) -> Transition:
    """Relational composition; post variables of ``t1`` and pre variables of ``t2``
    become fresh shared intermediates, which are auxiliary in the result."""
    fresh = fresh or _default_fresh
    if t1.dst != t2.src:
        return Transition(tid, t1.src, t2.dst, FALSE, Provenance("chain", (t1.id, t2.id)))
    t2 = rename_aux_apart(t2, aux_vars(t1), fresh)
    mids = {x: fresh(x) for x in variables_}
    first = rename(t1.cond, {prime(x): m for x, m in mids.items()})
    second = rename(t2.cond, dict(mids))
    return Transition(tid, t1.src, t2.dst, conj(first, second), Provenance("chain", (t1.id, t2.id)))


def chain_seq(seq: Sequence[Transition], variables_: Sequence[str], fresh: FreshNames | None = None) -> Transition:
    if not seq:
        raise ValueError("chain_seq needs a non-empty sequence")
    result = seq[0]
    for t in seq[1:]:
        result = chain(result, t, variables_, fresh)
    if len(seq) > 1:
        result = replace(result, provenance=Provenance("chain", tuple(t.id for t in seq)))
    return result


def is_recursive_seq(seq: Sequence[Transition]) -> bool:
    return bool(seq) and seq[0].src == seq[-1].dst


def restrict(t: Transition, cond: Formula) -> Transition:
    """``t|_cond``."""
    return t.with_cond(cond)


# --------------------------------------------------------------------------
# Bounded brute-force oracle


def _propagate_and_search(lits: list[Lit], order: list[str], domains: Mapping[str, range],
                          assignment: dict[str, int], project: Sequence[str], out: set) -> None:
    """DFS over ``order`` with equation propagation; collects projections of models.

    Once every variable in ``project`` is assigned, only existence of an extension
    matters, so the search below that point stops at the first model.
    """

    def consistent() -> bool:
        for l in lits:
            if l.poly.variables() <= assignment.keys() and not l.holds(assignment):
                return False
        return True

    def propagate(trail: list[str]) -> bool:
        progress = True
        while progress:
            progress = False
            for l in lits:
                if l.rel != "=":
                    continue
                free = [v for v in l.poly.variables() if v not in assignment]
                if len(free) != 1:
                    continue
                v = free[0]
                p = l.poly.partial_evaluate(assignment)
                if p.degree() != 1:
                    continue
                a = p.linear_coefficient(v)
                b = p.const_value()
                if a is None or (-b) % a:
                    return False
                val = -b // a
                if val not in domains[v]:
                    return False
                assignment[v] = val
                trail.append(v)
                progress = True
        return consistent()

    def undo(trail: list[str]) -> None:
        for v in trail:
            del assignment[v]

    def projected_done() -> bool:
        return all(v in assignment for v in project)

    def rec() -> bool:
        trail: list[str] = []
        if not propagate(trail):
            undo(trail)
            return False
        nxt = next((v for v in order if v not in assignment), None)
        if nxt is None:
            out.add(tuple(assignment[v] for v in project))
            undo(trail)
            return True
        exist_only = projected_done()
        found = False
        for val in domains[nxt]:
            assignment[nxt] = val
            if consistent() and rec():
                found = True
                if exist_only:
                    del assignment[nxt]
                    break
            del assignment[nxt]
        undo(trail)
        return found

    rec()


def models_projected(cond: Formula, domains: Mapping[str, range], project: Sequence[str]) -> set[tuple[int, ...]]:
    """Projections onto ``project`` of all models of ``cond`` with each variable
    ranging over ``domains``; disjunctions are explored branch by branch."""
    out: set[tuple[int, ...]] = set()
    for br in _dnf(cond):
        if br == FALSE:
            continue
        lits = [g for g in conjuncts(br) if isinstance(g, Lit)]
        order = list(project) + sorted(set(variables(br)) - set(project))
        _propagate_and_search(lits, order, domains, {}, list(project), out)
    return out


def _dnf(f: Formula):
    if isinstance(f, Or):
        for a in f.args:
            yield from _dnf(a)
    elif isinstance(f, And):
        parts = [list(_dnf(a)) for a in f.args]
        for combo in itertools.product(*parts):
            yield conj(*combo)
    else:
        yield f


def enumerate_relation(t: Transition, bound: int, variables_: Sequence[str], aux_bound: int | None = None,
                       aux_domains: Mapping[str, range] | None = None) -> set[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All ``(s, t)`` in ``[-bound, bound]^d`` squared with ``s ->_t t``.

    Auxiliary variables range over ``[-A, A]`` (``A = 4*bound + 4`` by default) or
    over an explicit range given in ``aux_domains``.  Since auxiliaries are
    existential, the result under-approximates the relation when witnesses are large.
    """
    if t.cond == FALSE:
        return set()
    A = 4 * bound + 4 if aux_bound is None else aux_bound
    box = range(-bound, bound + 1)
    aux_box = range(-A, A + 1)
    pre = list(variables_)
    post = [prime(x) for x in variables_]
    domains: dict[str, range] = {v: box for v in pre + post}
    for v in variables(t.cond):
        if v not in domains:
            domains[v] = (aux_domains or {}).get(v, aux_box)
    d = len(pre)
    return {(m[:d], m[d:]) for m in models_projected(t.cond, domains, pre + post)}


def compose(r1: set, r2: set) -> set:
    by_pre: dict = {}
    for s, t in r2:
        by_pre.setdefault(s, []).append(t)
    return {(s, u) for s, t in r1 for u in by_pre.get(t, ())}


def holds_for(t: Transition, pre: Sequence[int], post: Sequence[int], variables_: Sequence[str]) -> bool:
    """Ground check of a condition without auxiliaries."""
    model = dict(zip(variables_, pre))
    model.update({prime(x): v for x, v in zip(variables_, post)})
    return evaluate(t.cond, model)
