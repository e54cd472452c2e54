import shutil
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

from ntprover import engine as engine_mod
from ntprover.engine import Engine, state_at
from ntprover.logic import Poly, conj, disj, lit, negate
from ntprover.nonterm import simulate
from ntprover.parser import parse_file
from ntprover.smt import SmtClient

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
TERMINATING = [
    "countdown.its", "countup.its", "step2.its", "double_loop.its", "lex.its",
    "subtract.its", "two_locations.its", "bounded_up.its", "sequential.its", "step_by_y.its",
]

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

if shutil.which("z3") is None:
    pytest.exit("z3 is required on PATH (pip install z3-solver)", returncode=3)


@pytest.fixture(scope="session")
def smt():
    client = SmtClient()
    yield client
    client.close()


def load(name: str):
    return parse_file(CORPUS / name)


# --- every NO verdict produced anywhere in the run is re-checked ------------

CHECKED_NO: list[str] = []


def recheck_no(eng: Engine, verdict) -> None:
    w = verdict.witness
    assert w is not None and w.certificate is not None
    assert engine_mod.verify_witness(w, eng.ts, eng.store, eng.config.smt_command)
    start = state_at(w.model, len(w.prefix), eng.V)
    with SmtClient() as fresh:
        run = simulate(w.certificate, start, 25, eng.V, fresh)
    assert run is not None and len(run) == 26
    CHECKED_NO.append(",".join(str(t.id) for t in eng.ts.transitions) + f"@{eng.ts.init}")


@pytest.fixture(autouse=True)
def _recheck_every_no(monkeypatch):
    original = Engine.run

    def run(self):
        verdict = original(self)
        if verdict.token == "NO":
            recheck_no(self, verdict)
        return verdict

    monkeypatch.setattr(Engine, "run", run)
    yield


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


# --- strategies --------------------------------------------------------------

VARS3 = ("x", "y", "z")


@st.composite
def polys(draw, names=VARS3, coeff=2):
    p = Poly.const(draw(st.integers(-coeff, coeff)))
    for v in names:
        p = p + Poly.var(v) * draw(st.integers(-coeff, coeff))
    return p


@st.composite
def atoms(draw, names=VARS3):
    return lit(draw(polys(names)), draw(st.sampled_from(["=", "!=", "<=", "<", ">=", ">"])))


def formulas(names=VARS3):
    return st.recursive(
        atoms(names),
        lambda kids: st.one_of(
            st.lists(kids, min_size=2, max_size=3).map(lambda xs: conj(*xs)),
            st.lists(kids, min_size=2, max_size=3).map(lambda xs: disj(*xs)),
            kids.map(negate),
        ),
        max_leaves=6,
    )
