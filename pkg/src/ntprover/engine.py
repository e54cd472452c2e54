"""The clause-learning search over traces.

The engine keeps a trace of conjunctive transitions starting in ``init``, a
stack of blocked sets (one more than the trace length), and a store of
original and learned transitions.  Each iteration applies the first rule that
fires, in this order:

1. Refute: the trace ends in ``err``.
2. Nonterm (nonterm mode): look for a certificate on a recursive suffix not
   tried before; learn ``loc -> err [psi]``.
3. Covered: a suffix is redundant w.r.t. the store; backtrack.
4. Accelerate: replace the shortest acceleratable recursive suffix by a new
   learned transition.
5. Step: append a syntactic implicant of an active transition.
6. Backtrack.
7. Prove.

Trace variables are copied per depth: the state after ``k`` steps lives in
``x@k``, auxiliaries of the ``k``-th step in ``a@k``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

from .accel import accelerate, eliminate_mids
from .logic import (
    Formula,
    MissingVariableError,
    conj,
    evaluate,
    is_aux,
    is_conjunctive,
    literals,
    negate,
    rename,
    sip_of,
    variables,
)
from .nonterm import Certificate, certify_loop, check_certificate
from .smt import Answer, SmtClient
from .ts import (
    ERR,
    ERR_NAME,
    FreshNames,
    Location,
    Provenance,
    Transition,
    TransitionSystem,
    aux_vars,
    chain_seq,
    rename_aux_apart,
)

log = logging.getLogger(__name__)

NONTERM, SAFETY = "nonterm", "safety"


class InputError(ValueError):
    """The transition system is not a valid input for the requested mode."""


@dataclass
class Budget:
    seconds: float = 60.0
    max_depth: int = 50
    max_learned: int = 200

    def __post_init__(self):
        if self.seconds <= 0 or self.max_depth <= 0 or self.max_learned <= 0:
            raise ValueError("budget limits must be positive")


@dataclass
class EngineConfig:
    mode: str = NONTERM
    budget: Budget = field(default_factory=Budget)
    seed_order: str = "learned-first"  # or "file"
    smt_command: str | None = None
    smt_timeout: float = 10.0
    # which qualifying suffix a rule picks first
    accel_longest_first: bool = False
    covered_longest_first: bool = True


# --------------------------------------------------------------------------
# Data


def at_depth(cond: Formula, k: int, variables_: Sequence[str]) -> Formula:
    """Copy of a transition condition for the ``k``-th step of a trace."""
    mapping = {}
    for v in variables(cond):
        if v.endswith("'"):
            mapping[v] = f"{v[:-1]}@{k}"
        elif is_aux(v):
            mapping[v] = f"{v}@{k}"
        else:
            mapping[v] = f"{v}@{k - 1}"
    return rename(cond, mapping)


def state_at(model: dict[str, int], k: int, variables_: Sequence[str]) -> dict[str, int]:
    return {x: model[f"{x}@{k}"] for x in variables_ if f"{x}@{k}" in model}


@dataclass(frozen=True)
class TraceEntry:
    transition: Transition  # conjunctive, stored
    parent: int  # store id of the transition it was selected from
    depth: int
    model: dict = field(compare=False, hash=False)  # model of the trace formula up to this depth


@dataclass(frozen=True)
class Witness:
    prefix: tuple[TraceEntry, ...]
    final: TraceEntry  # the step into err
    certificate: Certificate | None
    model: dict

    @property
    def location(self) -> Location:
        return self.final.transition.src


@dataclass(frozen=True)
class Verdict:
    kind: str  # nonterm | unsafe | safe | unknown
    witness: Witness | None = None
    reason: str = ""

    @property
    def token(self) -> str:
        return {"nonterm": "NO", "unsafe": "unsafe", "safe": "safe"}.get(self.kind, "MAYBE")


@dataclass(frozen=True)
class Event:
    rule: str
    suffix: tuple[int, ...] = ()
    recursive: bool = False
    learned: int | None = None


class Store:
    """All transitions known to the engine, indexed by dense ids."""

    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.items: list[Transition] = list(ts.transitions)
        self.n_original = len(self.items)
        self._sips: dict[tuple[int, Formula], int] = {}
        self.learned: list[int] = []

    def __getitem__(self, tid: int) -> Transition:
        return self.items[tid]

    def __len__(self) -> int:
        return len(self.items)

    def add(self, src: Location, dst: Location, cond: Formula, prov: Provenance) -> Transition:
        t = Transition(len(self.items), src, dst, cond, prov)
        self.items.append(t)
        if prov.kind in ("accelerated", "nonterm"):
            self.learned.append(t.id)
        return t

    def sip_variant(self, parent: Transition, cond: Formula) -> Transition:
        if cond == parent.cond:
            return parent
        key = (parent.id, cond)
        if key not in self._sips:
            self._sips[key] = self.add(parent.src, parent.dst, cond, Provenance("sip", (parent.id,))).id
        return self.items[self._sips[key]]

    def conjunctive(self) -> list[Transition]:
        """The transitions that redundancy is measured against."""
        return [t for t in self.items if is_conjunctive(t.cond)]

    def candidates(self, mode: str, seed_order: str) -> list[Transition]:
        originals = list(self.items[:self.n_original])
        learned = [self.items[i] for i in self.learned]
        errs = [t for t in reversed(learned) if not t.safe]
        accels = [t for t in reversed(learned) if t.safe]
        if mode == SAFETY:
            originals = [t for t in originals if not t.safe] + [t for t in originals if t.safe]
        if seed_order == "file":
            return originals + errs + accels
        return errs + accels + originals


# --------------------------------------------------------------------------
# Engine


class Engine:
    def __init__(self, ts: TransitionSystem, config: EngineConfig | None = None, smt: SmtClient | None = None):
        self.ts = ts
        self.config = config or EngineConfig()
        if self.config.mode not in (NONTERM, SAFETY):
            raise ValueError(f"unknown mode {self.config.mode!r}")
        if self.config.mode == NONTERM and any(not t.safe for t in ts.transitions):
            raise InputError("nonterm mode expects a system without transitions into err")
        self.V = ts.variables
        self.smt = smt or SmtClient(self.config.smt_command, self.config.smt_timeout)
        self.fresh = FreshNames()
        self.store = Store(ts)
        self.trace: list[TraceEntry] = []
        self.blocked: list[set[int]] = [set()]
        self.nonterm_memo: set[tuple[int, ...]] = set()
        self.accel_memo: set[tuple[int, ...]] = set()
        self.certificates: dict[int, Certificate] = {}
        self.events: list[Event] = []
        self.incomplete: list[str] = []
        self._loops: dict[tuple[int, ...], Transition] = {}
        self._redundant: dict = {}
        self.observers: list = []  # called with the engine after every rule application

    # -- helpers -------------------------------------------------------------

    @property
    def mode(self) -> str:
        return self.config.mode

    def _note(self, reason: str) -> None:
        if reason not in self.incomplete:
            self.incomplete.append(reason)

    def trace_formula(self, upto: int | None = None) -> Formula:
        entries = self.trace if upto is None else self.trace[:upto]
        return conj(*(at_depth(e.transition.cond, e.depth, self.V) for e in entries))

    def loop(self, ids: tuple[int, ...]) -> Transition:
        """Chained transition for a sequence of store ids, mids eliminated."""
        if ids not in self._loops:
            seq = [self.store[i] for i in ids]
            self._loops[ids] = seq[0] if len(seq) == 1 else eliminate_mids(chain_seq(seq, self.V, self.fresh))
        return self._loops[ids]

    def redundant(self, t: Transition, s: Transition) -> bool:
        """``t`` is contained in ``s`` (sound under-approximation)."""
        if t.src != s.src or t.dst != s.dst:
            return False
        if t.id >= 0 and t.id == s.id:
            return True
        key = (t.src.name, t.dst.name, t.cond, s.id, s.cond)
        if key not in self._redundant:
            s2 = rename_aux_apart(s, aux_vars(t), self.fresh)
            ans = self.smt.entails(t.cond, s2.cond, aux_vars(s2))
            if ans is Answer.UNKNOWN:
                self._note("redundancy check unknown")
            self._redundant[key] = ans is Answer.YES
        return self._redundant[key]

    def redundant_in_store(self, t: Transition, strict: bool = False, exclude: int | None = None) -> bool:
        for s in self.store.conjunctive():
            if s.id == exclude or s.src != t.src or s.dst != t.dst:
                continue
            if self.redundant(t, s) and not (strict and self.redundant(s, t)):
                return True
        return False

    def suffixes(self, recursive_only: bool, longest_first: bool):
        n = len(self.trace)
        starts = range(n) if longest_first else range(n - 1, -1, -1)
        for i in starts:
            seq = self.trace[i:]
            rec = seq[0].transition.src == seq[-1].transition.dst
            if recursive_only and not rec:
                continue
            if any(not e.transition.safe for e in seq):
                continue
            yield i, tuple(e.transition.id for e in seq), rec

    def bt(self) -> TraceEntry:
        entry = self.trace.pop()
        self.blocked.pop()
        self.blocked[-1].add(entry.transition.id)
        return entry

    # -- rules ---------------------------------------------------------------

    def _select(self, t: Transition) -> tuple[Transition, dict] | None:
        """A non-blocked syntactic implicant of ``t`` that extends the trace."""
        if self.trace:
            if t.src != self.trace[-1].transition.dst:
                return None
        elif not t.initial:
            return None
        k = len(self.trace) + 1
        base = conj(self.trace_formula(), at_depth(t.cond, k, self.V))
        excluded: list[Formula] = []
        while True:
            res = self.smt.check_sat(conj(base, *excluded))
            if not res.sat:
                if not res.unsat:
                    self._note("satisfiability check unknown")
                return None
            sip = self.store.sip_variant(t, sip_of(t.cond, _local_model(t.cond, res.model, k)))
            if not any(self.redundant(sip, self.store[b]) for b in sorted(self.blocked[-1])):
                return sip, res.model
            if sip.cond == t.cond:
                return None
            excluded.append(negate(at_depth(sip.cond, k, self.V)))

    def step(self, t: Transition) -> bool:
        found = self._select(t)
        if found is None:
            return False
        sip, model = found
        self.trace.append(TraceEntry(sip, t.id, len(self.trace) + 1, model))
        self.blocked.append(set())
        self.events.append(Event("step", (sip.id,), sip.recursive))
        return True

    def step_any(self) -> bool:
        if len(self.trace) >= self.config.budget.max_depth:
            self._note("depth limit reached")
            return False
        for t in self.store.candidates(self.mode, self.config.seed_order):
            if self.step(t):
                return True
        return False

    def backtrack(self) -> bool:
        """Backtrack if the tip is safe and no transition is active."""
        if not self.trace or not self.trace[-1].transition.safe:
            return False
        if len(self.trace) < self.config.budget.max_depth and any(
                self._select(t) for t in self.store.candidates(self.mode, self.config.seed_order)):
            return False
        entry = self.bt()
        self.events.append(Event("backtrack", (entry.transition.id,)))
        return True

    def covered(self) -> bool:
        for i, ids, rec in self.suffixes(recursive_only=self.mode == NONTERM,
                                           longest_first=self.config.covered_longest_first):
            if len(ids) == 1:
                t = self.store[ids[0]]
                hit = self.redundant_in_store(t, strict=True, exclude=t.id)
            else:
                hit = self.redundant_in_store(self.loop(ids))
            if hit:
                self.bt()
                self.events.append(Event("covered", ids, rec))
                return True
        return False

    def accelerate_suffix(self) -> bool:
        if len(self.store.learned) >= self.config.budget.max_learned:
            self._note("learned-transition limit reached")
            return False
        for i, ids, _ in self.suffixes(recursive_only=True, longest_first=self.config.accel_longest_first):
            if ids in self.accel_memo:
                continue
            loop = self.loop(ids)
            acc = accelerate(loop, self.V, self.smt, self.fresh) if is_conjunctive(loop.cond) else None
            if acc is None:
                self.accel_memo.add(ids)
                continue
            cand = Transition(-1, loop.src, loop.dst, acc.cond, Provenance("accelerated", ids))
            if self.redundant_in_store(cand) or (len(ids) > 1 and self.redundant(cand, loop)):
                self.accel_memo.add(ids)
                continue
            res = self.smt.check_sat(conj(self.trace_formula(i), at_depth(cand.cond, i + 1, self.V)))
            if not res.sat:
                self.accel_memo.add(ids)
                continue
            learned = self.store.add(cand.src, cand.dst, cand.cond, cand.provenance)
            del self.trace[i:]
            del self.blocked[i + 1:]
            self.trace.append(TraceEntry(learned, learned.id, i + 1, res.model))
            self.blocked.append({learned.id})
            self.events.append(Event("accelerate", ids, True, learned.id))
            return True
        return False

    def nonterm_suffix(self) -> bool:
        if len(self.store.learned) >= self.config.budget.max_learned:
            self._note("learned-transition limit reached")
            return False
        for i, ids, _ in self.suffixes(recursive_only=True, longest_first=True):
            if ids in self.nonterm_memo:
                continue
            self.nonterm_memo.add(ids)
            loop = self.loop(ids)
            # steer point certificates towards states reachable at the loop head
            context = rename(self.trace_formula(i), {f"{x}@{i}": x for x in self.V})
            cert = certify_loop(loop, self.V, self.smt, ids, context)
            if cert is None:
                continue
            err = self.ts.location(ERR_NAME)
            cand = Transition(-1, loop.src, err, cert.psi, Provenance("nonterm", ids))
            if self.redundant_in_store(cand):
                continue
            learned = self.store.add(loop.src, err, cert.psi, Provenance("nonterm", ids))
            self.certificates[learned.id] = cert
            self.events.append(Event("nonterm", ids, True, learned.id))
            return True
        return False

    def refute(self) -> Verdict:
        final = self.trace[-1]
        cert = self.certificates.get(final.parent) if self.mode == NONTERM else None
        if self.mode == NONTERM and cert is None:
            return Verdict("unknown", reason="error location reached without certificate")
        w = Witness(tuple(self.trace[:-1]), final, cert, final.model)
        self.events.append(Event("refute", (final.transition.id,)))
        if not verify_witness(w, self.ts, self.store, self.config.smt_command, self.config.smt_timeout):
            log.error("witness failed independent verification")
            return Verdict("unknown", reason="witness verification failed")
        return Verdict(NONTERM if self.mode == NONTERM else "unsafe", w)

    def prove(self) -> Verdict:
        self.events.append(Event("prove"))
        if self.mode == NONTERM:
            return Verdict("unknown", reason="search exhausted")
        if self.incomplete:
            return Verdict("unknown", reason="; ".join(self.incomplete))
        return Verdict("safe")

    # -- driver --------------------------------------------------------------

    def run(self) -> Verdict:
        deadline = time.monotonic() + self.config.budget.seconds
        self.events.append(Event("init"))
        while True:
            for obs in self.observers:
                obs(self)
            if time.monotonic() > deadline:
                return Verdict("unknown", reason="timeout")
            if self.trace and self.trace[-1].transition.dst.kind == ERR:
                return self.refute()
            if self.mode == NONTERM and self.nonterm_suffix():
                continue
            if self.covered():
                continue
            if self.accelerate_suffix():
                continue
            if self.step_any():
                continue
            if self.trace:
                entry = self.bt()
                self.events.append(Event("backtrack", (entry.transition.id,)))
                continue
            return self.prove()


def _local_model(cond: Formula, model: dict[str, int], k: int) -> dict[str, int]:
    out = {}
    for v in variables(cond):
        if v.endswith("'"):
            out[v] = model[f"{v[:-1]}@{k}"]
        elif is_aux(v):
            out[v] = model[f"{v}@{k}"]
        else:
            out[v] = model[f"{v}@{k - 1}"]
    return out


def analyze(ts: TransitionSystem, mode: str = NONTERM, budget: Budget | None = None,
            smt: SmtClient | None = None, **kw) -> Verdict:
    cfg = EngineConfig(mode=mode, budget=budget or Budget(), **kw)
    return Engine(ts, cfg, smt).run()


# --------------------------------------------------------------------------
# Independent witness check


def _provenance_ok(tid: int, store: Store, ts: TransitionSystem, smt: SmtClient, seen: dict[int, bool]) -> bool:
    if tid in seen:
        return seen[tid]
    seen[tid] = False  # cycles are invalid
    t = store[tid]
    kind = t.provenance.kind
    V = ts.variables
    if kind == "original":
        ok = tid < store.n_original and ts.transitions[tid].cond == t.cond
    elif kind == "sip":
        (p,) = t.provenance.sources
        parent = store[p]
        ok = (_provenance_ok(p, store, ts, smt, seen) and parent.src == t.src and parent.dst == t.dst
              and is_conjunctive(t.cond) and set(literals(t.cond)) <= set(literals(parent.cond)))
    elif kind in ("accelerated", "nonterm"):
        srcs = t.provenance.sources
        ok = bool(srcs) and all(_provenance_ok(s, store, ts, smt, seen) for s in srcs)
        if ok:
            seq = [store[s] for s in srcs]
            loop = seq[0] if len(seq) == 1 else eliminate_mids(chain_seq(seq, V, FreshNames(10**6)))
            if kind == "accelerated":
                acc = accelerate(loop, V, smt, FreshNames(2 * 10**6))
                ok = (acc is not None and loop.src == t.src == t.dst
                      and smt.equivalent(acc.cond, t.cond, aux_vars(acc.cond), aux_vars(t.cond)) is Answer.YES)
            else:
                ok = t.src == loop.src and check_certificate(t.cond, loop, V, smt)
    else:
        ok = False
    seen[tid] = ok
    return ok


def verify_witness(w: Witness, ts: TransitionSystem, store: Store, smt_command: str | None = None,
                   smt_timeout: float = 10.0) -> bool:
    """Re-check a witness from scratch with a new solver process."""
    V = ts.variables
    entries = list(w.prefix) + [w.final]
    if not entries or not entries[0].transition.initial or w.final.transition.dst.kind != ERR:
        return False
    for a, b in zip(entries, entries[1:]):
        if a.transition.dst != b.transition.src:
            return False
    for k, e in enumerate(entries, start=1):
        if e.depth != k or store[e.transition.id] != e.transition:
            return False
    formula = conj(*(at_depth(e.transition.cond, e.depth, V) for e in entries))
    try:
        if not evaluate(formula, w.model):
            return False
        if w.certificate is not None:
            tip = rename(w.certificate.psi, {x: f"{x}@{len(w.prefix)}" for x in V})
            if not evaluate(tip, w.model):
                return False
    except MissingVariableError:
        return False
    with SmtClient(smt_command, smt_timeout) as smt:
        seen: dict[int, bool] = {}
        if not all(_provenance_ok(e.transition.id, store, ts, smt, seen) for e in entries):
            return False
        if w.certificate is not None:
            cert = w.certificate
            final = store[w.final.parent]
            if final.provenance != Provenance("nonterm", cert.source) or final.cond != cert.psi:
                return False
            if not _provenance_ok(final.id, store, ts, smt, seen):
                return False
            if not check_certificate(cert.psi, cert.transition, V, smt):
                return False
    return True


__all__ = [
    "Budget",
    "Engine",
    "EngineConfig",
    "Event",
    "InputError",
    "NONTERM",
    "SAFETY",
    "Store",
    "TraceEntry",
    "Verdict",
    "Witness",
    "analyze",
    "at_depth",
    "state_at",
    "verify_witness",
]
