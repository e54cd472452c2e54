"""Command line: ``prover [options] FILE`` and ``prover corpus DIR EXPECTATIONS``.

The verdict token is always the first line on stdout; everything else that is
not part of a requested proof goes to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .engine import NONTERM, SAFETY, Budget, Engine, EngineConfig, InputError, Verdict, state_at
from .logic import render
from .parser import ParseError, parse_file
from .smt import ModelValidationError, SolverError
from .ts import TransitionSystem

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


@dataclass
class RunConfig:
    path: str
    mode: str = NONTERM
    smt: str | None = None
    timeout: float = 60.0
    smt_timeout: float = 10.0
    max_depth: int = 50
    max_learned: int = 200
    output: str = "plain"  # plain | proof | machine
    seed_order: str = "learned-first"
    verbose: int = 0

    def __post_init__(self):
        if min(self.timeout, self.smt_timeout, self.max_depth, self.max_learned) <= 0:
            raise ValueError("all limits must be positive")

    def engine_config(self) -> EngineConfig:
        return EngineConfig(self.mode, Budget(self.timeout, self.max_depth, self.max_learned),
                            self.seed_order, self.smt, self.smt_timeout)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--smt", help="solver command (default: $NTPROVER_SMT or 'z3 -in')")
    p.add_argument("--timeout", type=float, default=60.0, help="wall-clock budget in seconds")
    p.add_argument("--smt-timeout", type=float, default=10.0, help="per-query solver timeout in seconds")
    p.add_argument("--max-depth", type=int, default=50)
    p.add_argument("--max-learned", type=int, default=200)
    p.add_argument("--seed-order", choices=["learned-first", "file"], default="learned-first")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _analyze_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prover", description="Disprove termination of integer transition systems.")
    p.add_argument("file")
    p.add_argument("--mode", choices=[NONTERM, SAFETY], default=NONTERM)
    p.add_argument("--proof", action="store_true", help="print the witness after the verdict")
    p.add_argument("--machine", action="store_true", help="print the witness as key/value lines")
    _add_common(p)
    return p


def _corpus_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prover corpus", description="Run a directory against expected verdicts.")
    p.add_argument("dir")
    p.add_argument("expectations")
    _add_common(p)
    return p


# --------------------------------------------------------------------------
# Output


def _state(model: dict, k: int, ts: TransitionSystem) -> str:
    vals = state_at(model, k, ts.variables)
    return " ".join(f"{x}={vals[x]}" if x in vals else f"{x}=_" for x in ts.variables)


def format_proof(v: Verdict, ts: TransitionSystem) -> list[str]:
    w = v.witness
    if w is None:
        return [f"reason: {v.reason}"] if v.reason else []
    entries = list(w.prefix) + [w.final]
    lines = ["trace:"]
    for e in entries:
        t = e.transition
        lines.append(f"  {e.depth}. {t.src} -> {t.dst} [{render(t.cond)}]  #{t.id} {t.provenance}")
    if w.certificate is not None:
        c = w.certificate
        lines.append(f"certificate ({c.technique}) at {w.location} for {', '.join(f'#{s}' for s in c.source)}:")
        lines.append(f"  {render(c.psi)}")
    lines.append("states:")
    for k in range(len(entries) + (0 if w.certificate is not None else 1)):
        lines.append(f"  {k}: {_state(w.model, k, ts)}")
    return lines


def format_machine(v: Verdict, ts: TransitionSystem, mode: str) -> list[str]:
    lines = [f"verdict: {v.token}", f"mode: {mode}"]
    if v.reason:
        lines.append(f"reason: {v.reason}")
    w = v.witness
    if w is None:
        return lines
    entries = list(w.prefix) + [w.final]
    lines.append(f"steps: {len(entries)}")
    for e in entries:
        t = e.transition
        lines += [
            "",
            f"step: {e.depth}",
            f"id: {t.id}",
            f"src: {t.src}",
            f"dst: {t.dst}",
            f"cond: {render(t.cond)}",
            f"provenance: {t.provenance}",
        ]
    if w.certificate is not None:
        c = w.certificate
        lines += ["", f"certificate.location: {w.location}", f"certificate.technique: {c.technique}",
                  f"certificate.source: {' '.join(map(str, c.source))}", f"certificate.psi: {render(c.psi)}"]
    lines.append("")
    for k in range(len(entries) + (0 if w.certificate is not None else 1)):
        lines.append(f"state.{k}: {_state(w.model, k, ts)}")
    return lines


# --------------------------------------------------------------------------
# Entry points


def run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        ts = parse_file(cfg.path)
        engine = Engine(ts, cfg.engine_config())
    except (OSError, ParseError, InputError) as e:
        print(f"prover: {cfg.path}: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        verdict = engine.run()
    except (SolverError, ModelValidationError) as e:
        print(f"prover: solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        engine.smt.close()
    print(verdict.token, file=out)
    if cfg.output == "machine":
        print("\n".join(format_machine(verdict, ts, cfg.mode)), file=out)
    elif cfg.output == "proof":
        print("\n".join(format_proof(verdict, ts)), file=out)
    elif verdict.reason:
        print(f"prover: {verdict.reason}", file=sys.stderr)
    return EXIT_OK


def read_expectations(path: str | Path) -> list[tuple[str, str]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            name, token = line.split()
            rows.append((name, token))
    return rows


def mode_for(token: str) -> str:
    return SAFETY if token in ("safe", "unsafe") else NONTERM


def run_corpus(directory: str, expectations: str, base: RunConfig | None = None, out=None) -> int:
    out = out or sys.stdout
    base = base or RunConfig(path="")
    mismatches = 0
    for name, expected in read_expectations(expectations):
        path = Path(directory) / name
        if not path.exists():
            print(f"{name}\t{expected}\tmissing\t-\tFAIL", file=out)
            mismatches += 1
            continue
        cfg = RunConfig(str(path), mode_for(expected), base.smt, base.timeout, base.smt_timeout,
                        base.max_depth, base.max_learned, "plain", base.seed_order)
        buf = _Capture()
        t0 = time.monotonic()
        code = run(cfg, out=buf)
        elapsed = time.monotonic() - t0
        got = buf.first_line() if code == EXIT_OK else f"exit{code}"
        ok = got == expected
        mismatches += not ok
        print(f"{name}\t{expected}\t{got}\t{elapsed:.2f}s\t{'PASS' if ok else 'FAIL'}", file=out)
    return 0 if mismatches == 0 else 1


class _Capture:
    def __init__(self):
        self.parts: list[str] = []

    def write(self, s: str) -> None:
        self.parts.append(s)

    def flush(self) -> None:
        pass

    def first_line(self) -> str:
        return "".join(self.parts).split("\n", 1)[0]


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "corpus":
        a = _corpus_parser().parse_args(argv[1:])
        output = "plain"
    else:
        a = _analyze_parser().parse_args(argv)
        output = "machine" if a.machine else "proof" if a.proof else "plain"
    logging.basicConfig(level=logging.DEBUG if a.verbose > 1 else logging.INFO if a.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig(getattr(a, "file", ""), getattr(a, "mode", NONTERM), a.smt, a.timeout, a.smt_timeout,
                        a.max_depth, a.max_learned, output, a.seed_order, a.verbose)
    except ValueError as e:
        print(f"prover: {e}", file=sys.stderr)
        return EXIT_INPUT
    if argv and argv[0] == "corpus":
        return run_corpus(a.dir, a.expectations, cfg)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
