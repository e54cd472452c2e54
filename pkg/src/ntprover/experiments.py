"""Random instance generators and bounded-domain checks.

Shared by the test-suite and the scripts in ``scripts/``.  Every check
compares a symbolic construction against brute-force enumeration.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from .accel import accelerate
from .logic import Formula, Poly, conj, disj, evaluate, lit, literals, prime, sip_of
from .smt import SmtClient
from .ts import FreshNames, Location, Transition, chain, compose, enumerate_relation

RELS = ("=", "!=", "<=", "<", ">=", ">")


def random_poly(rng: random.Random, names: Sequence[str], coeff: int, const: int | None = None) -> Poly:
    const = coeff if const is None else const
    p = Poly.const(rng.randint(-const, const))
    for v in names:
        p = p + Poly.var(v) * rng.randint(-coeff, coeff)
    return p


def random_literal(rng: random.Random, names: Sequence[str], coeff: int = 2, rels: Sequence[str] = RELS) -> Formula:
    k = rng.randint(1, min(2, len(names)))
    return lit(random_poly(rng, rng.sample(list(names), k), coeff), rng.choice(rels))


def random_nnf(rng: random.Random, names: Sequence[str], depth: int = 3) -> Formula:
    if depth == 0 or rng.random() < 0.25:
        return random_literal(rng, names)
    kids = [random_nnf(rng, names, depth - 1) for _ in range(rng.randint(2, 3))]
    return conj(*kids) if rng.random() < 0.5 else disj(*kids)


# --------------------------------------------------------------------------
# syntactic implicants


@dataclass
class SipReport:
    formulas: int = 0
    models: int = 0
    entailment_failures: list = field(default_factory=list)
    completeness_failures: list = field(default_factory=list)
    foreign_literals: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.entailment_failures or self.completeness_failures or self.foreign_literals)


def check_sip(psi: Formula, names: Sequence[str], domain: range, report: SipReport) -> None:
    """Disjunctive completeness and entailment of ``sip_of`` over a finite box."""
    points = [dict(zip(names, vals)) for vals in itertools.product(domain, repeat=len(names))]
    lits = literals(psi)
    index = {l: i for i, l in enumerate(lits)}
    truth = [[l.holds(p) for l in lits] for p in points]
    models = {i for i, p in enumerate(points) if evaluate(psi, p)}
    covered: set[int] = set()
    seen: dict[Formula, frozenset[int]] = {}
    report.formulas += 1
    report.models += len(models)
    for i in sorted(models):
        s = sip_of(psi, points[i])
        if s not in seen:
            sl = literals(s)
            if any(l not in index for l in sl):
                report.foreign_literals.append((psi, s))
                seen[s] = frozenset()
                continue
            idx = [index[l] for l in sl]
            seen[s] = frozenset(j for j, row in enumerate(truth) if all(row[k] for k in idx))
            if not seen[s] <= models:
                report.entailment_failures.append((psi, s))
        if i not in seen[s]:
            report.entailment_failures.append((psi, s, points[i]))
        covered |= seen[s]
    if covered != models:
        report.completeness_failures.append(psi)


def sip_suite(count: int = 200, seed: int = 0, names: Sequence[str] = ("a", "b", "c", "d"),
              bound: int = 3) -> SipReport:
    rng = random.Random(seed)
    report = SipReport()
    domain = range(-bound, bound + 1)
    while report.formulas < count:
        psi = random_nnf(rng, names)
        if isinstance(psi, Formula) and literals(psi):
            check_sip(psi, names, domain, report)
    return report


# --------------------------------------------------------------------------
# acceleration


def random_loop(rng: random.Random, names: Sequence[str], coeff: int = 3, guards: int = 2) -> Transition:
    loc = Location("l")
    parts: list[Formula] = []
    for x in names:
        parts.append(lit(Poly.var(prime(x)), "=", Poly.var(x) + rng.randint(-coeff, coeff)))
    for _ in range(rng.randint(1, guards)):
        parts.append(random_literal(rng, names, coeff, rels=("<=", "<", ">=", ">", "=", "!=")))
    return Transition(0, loc, loc, conj(*parts))


def closure_upto(rel: set, k: int) -> set:
    out, power = set(rel), set(rel)
    for _ in range(k - 1):
        power = compose(power, rel)
        out |= power
    return out


@dataclass
class AccelReport:
    loops: int = 0
    accelerated: int = 0
    failed: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def check_acceleration(t: Transition, names: Sequence[str], smt: SmtClient, fresh: FreshNames,
                       report: AccelReport, bound: int = 3, max_n: int = 4) -> None:
    report.loops += 1
    acc = accelerate(t, names, smt, fresh)
    if acc is None:
        report.failed += 1
        return
    report.accelerated += 1
    learned = Transition(1, t.src, t.dst, acc.cond)
    got = enumerate_relation(learned, bound, names, aux_domains={acc.param: range(1, max_n + 1)})
    want = closure_upto(enumerate_relation(t, bound, names), max_n)
    if got != want:
        report.mismatches.append((t, acc.cond, len(got ^ want)))


def acceleration_suite(count: int = 100, seed: int = 0, names: Sequence[str] = ("x", "y", "z"),
                       smt: SmtClient | None = None) -> AccelReport:
    rng = random.Random(seed)
    own = smt is None
    smt = smt or SmtClient()
    fresh = FreshNames()
    report = AccelReport()
    try:
        for _ in range(count):
            check_acceleration(random_loop(rng, names), names, smt, fresh, report)
    finally:
        if own:
            smt.close()
    return report


# --------------------------------------------------------------------------
# chaining


def random_conjunctive(rng: random.Random, names: Sequence[str], src: Location, dst: Location,
                       tid: int) -> Transition:
    allv = list(names) + [prime(x) for x in names]
    lits = [random_literal(rng, allv, 2, rels=("=", "!=", "<=", "<")) for _ in range(rng.randint(1, 3))]
    return Transition(tid, src, dst, conj(*lits))


@dataclass
class ChainReport:
    pairs: int = 0
    nonempty: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def chain_suite(count: int = 100, seed: int = 0, names: Sequence[str] = ("x", "y"), bound: int = 2) -> ChainReport:
    """Bounded relation of ``chain`` against relational composition.

    Intermediates range over the same box as the states, so the comparison
    is exact for the box-restricted relations.
    """
    rng = random.Random(seed)
    fresh = FreshNames()
    a, b, c = Location("a"), Location("b"), Location("c")
    report = ChainReport()
    for _ in range(count):
        t1 = random_conjunctive(rng, names, a, b, 0)
        t2 = random_conjunctive(rng, names, b, c, 1)
        chained = chain(t1, t2, names, fresh)
        got = enumerate_relation(chained, bound, names, aux_bound=bound)
        want = compose(enumerate_relation(t1, bound, names), enumerate_relation(t2, bound, names))
        report.pairs += 1
        report.nonempty += bool(want)
        if got != want:
            report.mismatches.append((t1, t2, len(got ^ want)))
    return report


__all__ = [
    "AccelReport",
    "ChainReport",
    "SipReport",
    "acceleration_suite",
    "chain_suite",
    "check_acceleration",
    "check_sip",
    "closure_upto",
    "random_conjunctive",
    "random_loop",
    "random_nnf",
    "sip_suite",
]

