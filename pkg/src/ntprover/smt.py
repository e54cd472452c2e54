"""SMT-LIB v2 client for an external solver process.

Every query runs inside its own ``push``/``pop`` frame, so the assertion stack
is back at its previous depth when a method returns.  Models returned by the
solver are re-checked with :func:`ntprover.logic.evaluate`; a model that fails
that check raises :class:`ModelValidationError` instead of being used.
"""

from __future__ import annotations

import enum
import os
import selectors
import shlex
import subprocess
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .logic import (
    FALSE,
    TRUE,
    And,
    Formula,
    Lit,
    Not,
    Or,
    Poly,
    conj,
    eliminate,
    evaluate,
    negate,
    variables,
)

SOLVER_ENV = "NTPROVER_SMT"
DEFAULT_SOLVER = "z3 -in"


class SolverError(RuntimeError):
    """The solver process could not be started or died."""


class SmtProtocolError(SolverError):
    """The solver answered something the client did not expect."""


class ModelValidationError(AssertionError):
    """A model reported by the solver does not satisfy the query."""


class Answer(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass
class SmtResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: dict[str, int] = field(default_factory=dict)
    reason: str = ""

    @property
    def sat(self) -> bool:
        return self.status == "sat"

    @property
    def unsat(self) -> bool:
        return self.status == "unsat"


# --------------------------------------------------------------------------
# Encoding


def symbol(name: str) -> str:
    return f"|{name}|"


def _num(c: int) -> str:
    return str(c) if c >= 0 else f"(- {-c})"


def poly_to_smt(p: Poly) -> str:
    if not p.terms:
        return "0"
    parts = []
    for m, c in p.terms:
        if not m:
            parts.append(_num(c))
            continue
        factors = [symbol(v) for v in m]
        if c != 1:
            factors.insert(0, _num(c))
        parts.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def to_smt(f: Formula) -> str:
    if f == TRUE:
        return "true"
    if f == FALSE:
        return "false"
    if isinstance(f, Lit):
        p = poly_to_smt(f.poly)
        if f.rel == "!=":
            return f"(not (= {p} 0))"
        return f"({f.rel} {p} 0)"
    if isinstance(f, And):
        return f"(and {' '.join(to_smt(a) for a in f.args)})"
    if isinstance(f, Or):
        return f"(or {' '.join(to_smt(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"(not {to_smt(f.arg)})"
    raise TypeError(f)


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of atoms (quoted symbols unquoted)."""
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append(ch)
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            tokens.append(text[i + 1:j])
            i = j + 1
        elif ch == '"':
            j = i + 1
            while True:
                j = text.index('"', j)
                if j + 1 < len(text) and text[j + 1] == '"':
                    j += 2
                    continue
                break
            tokens.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append(text[i:j])
            i = j

    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            out = []
            while tokens[pos] != ")":
                out.append(read())
            pos += 1
            return out
        return tok

    return read()


def _value(v) -> int:
    if isinstance(v, str):
        return int(v)
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -_value(v[1])
    raise SmtProtocolError(f"cannot read integer value {v!r}")


# --------------------------------------------------------------------------
# Client


class SmtClient:
    """One solver process speaking SMT-LIB v2 over stdin/stdout."""

    def __init__(self, command: str | None = None, timeout: float = 10.0):
        self.command = command or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
        self.timeout = timeout
        self.stats: Counter = Counter()
        self._proc: subprocess.Popen | None = None
        self._sel: selectors.BaseSelector | None = None
        self._buf = ""
        self._logic: str | None = None
        self.depth = 0

    # -- process management ------------------------------------------------

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                shlex.split(self.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1,
            )
        except OSError as e:
            raise SolverError(f"cannot start solver {self.command!r}: {e}") from e
        self._sel = selectors.DefaultSelector()
        self._sel.register(self._proc.stdout, selectors.EVENT_READ)
        self._buf = ""
        self._logic = None
        self.depth = 0
        self._options()

    def _options(self) -> None:
        self._command("(set-option :print-success true)", lenient=True)
        self._command("(set-option :produce-models true)", lenient=True)
        self._command(f"(set-option :timeout {int(self.timeout * 1000)})", lenient=True)

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.write("(exit)\n")
                self._proc.stdin.flush()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._sel.close()
            self._proc = None

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._sel.close()
            self._proc = None

    def __enter__(self) -> "SmtClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self._kill()
        except Exception:
            pass

    # -- wire protocol -----------------------------------------------------

    def _write(self, text: str) -> None:
        if self._proc is None:
            self._start()
        try:
            self._proc.stdin.write(text + "\n")
            self._proc.stdin.flush()
        except OSError as e:
            self._proc = None
            raise SolverError(f"solver pipe closed: {e}") from e

    def _fill(self, deadline: float) -> bool:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return False
        if not self._sel.select(remaining):
            return False
        chunk = os.read(self._proc.stdout.fileno(), 65536).decode()
        if not chunk:
            raise SolverError("solver process terminated")
        self._buf += chunk
        return True

    def _complete_response(self) -> int | None:
        """Length of the first complete response in the buffer, if any."""
        s = self._buf
        i = 0
        while i < len(s) and s[i].isspace():
            i += 1
        if i == len(s):
            return None
        if s[i] != "(":
            j = s.find("\n", i)
            return None if j < 0 else j + 1
        depth = 0
        while i < len(s):
            ch = s[i]
            if ch == "|":
                j = s.find("|", i + 1)
                if j < 0:
                    return None
                i = j
            elif ch == '"':
                j = i + 1
                while True:
                    j = s.find('"', j)
                    if j < 0:
                        return None
                    if j + 1 < len(s) and s[j + 1] == '"':
                        j += 2
                        continue
                    break
                i = j
            elif ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    return i + 1
            i += 1
        return None

    def _read(self, deadline: float) -> str | None:
        while True:
            n = self._complete_response()
            if n is not None:
                out, self._buf = self._buf[:n].strip(), self._buf[n:]
                return out
            if not self._fill(deadline):
                return None

    def _command(self, cmd: str, lenient: bool = False) -> str:
        self._write(cmd)
        resp = self._read(time.monotonic() + self.timeout + 5)
        if resp is None:
            self._kill()
            raise SolverError(f"solver did not answer {cmd!r}")
        if resp != "success" and not lenient:
            raise SmtProtocolError(f"{cmd!r} -> {resp}")
        return resp

    def _set_logic(self, logic: str) -> None:
        if self._proc is None:
            self._start()
        if self._logic == logic:
            return
        if self._logic is not None:
            self._command("(reset)")
            self._options()
        self._command(f"(set-logic {logic})")
        self._logic = logic

    def _run(self, logic: str, decls: Iterable[str], asserts: Iterable[str], values: list[str]) -> SmtResult:
        self._set_logic(logic)
        self.stats["queries"] += 1
        self._command("(push 1)")
        self.depth += 1
        try:
            for v in decls:
                self._command(f"(declare-const {symbol(v)} Int)")
            for a in asserts:
                self._command(f"(assert {a})")
            self._write("(check-sat)")
            resp = self._read(time.monotonic() + self.timeout + 5)
            if resp is None:
                self._kill()
                self.stats["unknown"] += 1
                return SmtResult("unknown", reason="timeout")
            if resp not in ("sat", "unsat", "unknown"):
                raise SmtProtocolError(f"check-sat -> {resp}")
            self.stats[resp] += 1
            if resp == "unknown":
                return SmtResult("unknown", reason="solver returned unknown")
            if resp == "unsat" or not values:
                return SmtResult(resp)
            self._write(f"(get-value ({' '.join(symbol(v) for v in values)}))")
            raw = self._read(time.monotonic() + self.timeout + 5)
            if raw is None:
                self._kill()
                raise SolverError("solver did not answer get-value")
            parsed = parse_sexpr(raw)
            if not isinstance(parsed, list) or (parsed and parsed[0] == "error"):
                raise SmtProtocolError(f"get-value -> {raw}")
            return SmtResult("sat", {str(k): _value(v) for k, v in parsed})
        finally:
            if self._proc is not None:
                self._command("(pop 1)")
                self.depth -= 1
            else:
                self.depth = 0

    # -- queries -------------------------------------------------------------

    def check_sat(self, f: Formula) -> SmtResult:
        vs = sorted(variables(f))
        res = self._run("QF_NIA", vs, [to_smt(f)], vs)
        if res.sat:
            model = {v: res.model[v] for v in vs}
            if not evaluate(f, model):
                raise ModelValidationError(f"solver model {model} does not satisfy the query")
            res.model = model
        return res

    def entails(self, psi: Formula, phi: Formula, phi_aux: Iterable[str] = ()) -> Answer:
        """Validity of ``forall free. psi -> exists phi_aux. phi``.

        Variables of ``psi`` are universal; ``phi_aux`` must not occur in ``psi``.
        """
        phi_aux = set(phi_aux)
        if phi_aux & variables(psi):
            raise ValueError("existential variables of phi must be renamed apart from psi")
        phi, rest = eliminate(phi, phi_aux)
        if not rest:
            res = self.check_sat(conj(psi, negate(phi)))
            return _answer(res)
        free = sorted((variables(psi) | variables(phi)) - rest)
        bound = " ".join(f"({symbol(v)} Int)" for v in sorted(rest))
        self.stats["quantified"] += 1
        res = self._run("NIA", free, [to_smt(psi), f"(forall ({bound}) (not {to_smt(phi)}))"], [])
        return _answer(res)

    def equivalent(self, psi: Formula, phi: Formula, psi_aux: Iterable[str] = (),
                   phi_aux: Iterable[str] = ()) -> Answer:
        """Two-sided entailment; auxiliaries of each side are existential."""
        a = self.entails(psi, phi, phi_aux)
        if a is Answer.NO:
            return a
        b = self.entails(phi, psi, psi_aux)
        if Answer.NO in (a, b):
            return Answer.NO
        if Answer.UNKNOWN in (a, b):
            return Answer.UNKNOWN
        return Answer.YES


def _answer(res: SmtResult) -> Answer:
    if res.unsat:
        return Answer.YES
    if res.sat:
        return Answer.NO
    return Answer.UNKNOWN


