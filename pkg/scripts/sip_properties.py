"""Check completeness and entailment of syntactic implicants on random formulas."""

import argparse
import sys

from ntprover.experiments import sip_suite


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound", type=int, default=3)
    a = p.parse_args()
    r = sip_suite(a.count, a.seed, bound=a.bound)
    print(f"formulas={r.formulas} models={r.models} entailment_failures={len(r.entailment_failures)} "
          f"completeness_failures={len(r.completeness_failures)} foreign_literals={len(r.foreign_literals)}")
    return 0 if r.ok else 1


if __name__ == "__main__":
    sys.exit(main())
