"""Run the bundled corpus against its expected verdicts.

    python3 scripts/run_corpus.py [--timeout SECONDS]
"""

import argparse
import sys
from pathlib import Path

from ntprover.cli import RunConfig, run_corpus

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dir", default=str(ROOT / "corpus"))
    p.add_argument("--expectations", default=None)
    p.add_argument("--timeout", type=float, default=60.0)
    a = p.parse_args()
    exp = a.expectations or str(Path(a.dir) / "expected.txt")
    return run_corpus(a.dir, exp, RunConfig(path="", timeout=a.timeout))


if __name__ == "__main__":
    sys.exit(main())
