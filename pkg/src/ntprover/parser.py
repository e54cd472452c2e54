"""Reader and writer for the native ``.its`` format.

::

    # comment
    vars x y z
    init l0
    rule l0 -> l1 :|: x' <= 0 && z' >= 5000 && y' <= z'
    rule l1 -> l1 :|: x < z && (y' = y || !(y' < y))

``true`` and ``false`` are accepted as atoms.  Primed variables a rule does not
mention are unconstrained (havoc); a warning lists them.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .logic import FALSE, TRUE, Formula, Not, Poly, conj, disj, lit, nnf, prime, render, variables
from .ts import ERR_NAME, INIT, Location, Transition, TransitionSystem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    offset: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_.]*'?)
  | (?P<op>:\|:|->|&&|\|\||!=|<=|>=|[<>=!+\-*()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(line: str, lineno: int, base: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        span = SourceSpan(lineno, pos + 1, base + len(line[:pos].encode("utf-8")))
        if not m:
            raise ParseError(f"unexpected character {line[pos]!r}", span)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), span))
        pos = m.end()
    toks.append(_Tok("eol", "", SourceSpan(lineno, len(line) + 1, base + len(line.encode("utf-8")))))
    return toks


class _Backtrack(Exception):
    pass


class _FormulaParser:
    def __init__(self, toks: list[_Tok], pos: int, declared: set[str]):
        self.toks = toks
        self.pos = pos
        self.declared = declared

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def eat(self, text: str) -> bool:
        if self.cur.kind == "op" and self.cur.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.eat(text):
            raise ParseError(f"expected {text!r}, found {self.cur.text or 'end of line'!r}", self.cur.span)

    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.eat("||"):
            parts.append(self.conjunction())
        return disj(*parts)

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.eat("&&"):
            parts.append(self.unary())
        return conj(*parts)

    def unary(self) -> Formula:
        tok = self.cur
        if tok.kind == "op" and tok.text == "!":
            self.pos += 1
            return Not(self.unary())
        if tok.kind == "id" and tok.text in ("true", "false"):
            self.pos += 1
            return TRUE if tok.text == "true" else FALSE
        if tok.kind == "op" and tok.text == "(":
            saved = self.pos
            try:
                return self.atom(strict=True)
            except _Backtrack:
                self.pos = saved
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return f
        return self.atom(strict=False)

    def atom(self, strict: bool) -> Formula:
        try:
            lhs = self.poly()
        except ParseError:
            if strict:
                raise _Backtrack
            raise
        tok = self.cur
        if tok.kind == "op" and tok.text in ("=", "!=", "<=", "<", ">=", ">"):
            self.pos += 1
            rhs = self.poly()
            return lit(lhs, tok.text, rhs)
        if strict:
            raise _Backtrack
        raise ParseError(f"expected a comparison, found {tok.text or 'end of line'!r}", tok.span)

    def poly(self) -> Poly:
        p = self.term()
        while True:
            if self.eat("+"):
                p = p + self.term()
            elif self.eat("-"):
                p = p - self.term()
            else:
                return p

    def term(self) -> Poly:
        p = self.factor()
        while self.eat("*"):
            p = p * self.factor()
        return p

    def factor(self) -> Poly:
        tok = self.cur
        if self.eat("-"):
            return -self.factor()
        if self.eat("("):
            p = self.poly()
            self.expect(")")
            return p
        if tok.kind == "num":
            self.pos += 1
            return Poly.const(int(tok.text))
        if tok.kind == "id" and tok.text not in ("true", "false"):
            base = tok.text.rstrip("'")
            if base not in self.declared:
                raise ParseError(f"undeclared variable {base!r}", tok.span)
            self.pos += 1
            return Poly.var(tok.text)
        raise ParseError(f"unexpected {tok.text or 'end of line'!r} in term", tok.span)


def parse(text: str) -> TransitionSystem:
    variables_: tuple[str, ...] | None = None
    init: str | None = None
    rules: list[tuple[str, str, Formula, SourceSpan]] = []
    base = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        toks = _tokenize(line, lineno, base)
        base += len(line.encode("utf-8")) + 1
        if toks[0].kind == "eol":
            continue
        head = toks[0]
        if head.kind != "id":
            raise ParseError(f"expected 'vars', 'init' or 'rule', found {head.text!r}", head.span)
        if head.text == "vars":
            if variables_ is not None:
                raise ParseError("duplicate vars declaration", head.span)
            names = []
            for t in toks[1:-1]:
                if t.kind != "id" or t.text.endswith("'") or t.text in ("true", "false"):
                    raise ParseError(f"bad variable name {t.text!r}", t.span)
                if t.text in names:
                    raise ParseError(f"variable {t.text!r} declared twice", t.span)
                names.append(t.text)
            if not names:
                raise ParseError("vars needs at least one variable", head.span)
            variables_ = tuple(names)
        elif head.text == "init":
            if init is not None:
                raise ParseError("duplicate init declaration", head.span)
            if len(toks) != 3 or toks[1].kind != "id":
                raise ParseError("expected 'init <location>'", head.span)
            if toks[1].text == ERR_NAME:
                raise ParseError("the error location cannot be initial", toks[1].span)
            init = toks[1].text
        elif head.text == "rule":
            if variables_ is None:
                raise ParseError("rule before vars declaration", head.span)
            if init is None:
                raise ParseError("rule before init declaration", head.span)
            if len(toks) < 5 or toks[1].kind != "id" or toks[2].text != "->" or toks[3].kind != "id":
                raise ParseError("expected 'rule <loc> -> <loc> :|: <formula>'", head.span)
            src, dst = toks[1].text, toks[3].text
            if src == ERR_NAME:
                raise ParseError("rules cannot leave the error location", toks[1].span)
            if dst == init:
                raise ParseError("rules cannot enter the initial location", toks[3].span)
            if toks[4].text != ":|:":
                raise ParseError("expected ':|:'", toks[4].span)
            fp = _FormulaParser(toks, 5, set(variables_))
            cond = nnf(fp.formula())
            if fp.cur.kind != "eol":
                raise ParseError(f"unexpected {fp.cur.text!r}", fp.cur.span)
            rules.append((src, dst, cond, head.span))
        else:
            raise ParseError(f"unknown statement {head.text!r}", head.span)
    if variables_ is None:
        raise ParseError("missing vars declaration", SourceSpan(1, 1, 0))
    if init is None:
        raise ParseError("missing init declaration", SourceSpan(1, 1, 0))

    def loc(name: str) -> Location:
        if name == init:
            return Location(name, INIT)
        if name == ERR_NAME:
            return Location(name, "err")
        return Location(name, "plain")

    transitions = []
    for i, (src, dst, cond, span) in enumerate(rules):
        if dst != ERR_NAME:
            havoc = [prime(x) for x in variables_ if prime(x) not in variables(cond)]
            if havoc:
                log.warning("%s: rule %s -> %s leaves %s unconstrained", span, src, dst, ", ".join(havoc))
        transitions.append(Transition(i, loc(src), loc(dst), cond))
    return TransitionSystem(variables_, init, tuple(transitions))


def parse_file(path) -> TransitionSystem:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def render_ts(ts: TransitionSystem) -> str:
    lines = [f"vars {' '.join(ts.variables)}", f"init {ts.init}"]
    for t in ts.transitions:
        lines.append(f"rule {t.src.name} -> {t.dst.name} :|: {render(t.cond)}")
    return "\n".join(lines) + "\n"
