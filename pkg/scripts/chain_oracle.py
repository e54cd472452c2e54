"""Compare chained transitions with relational composition on a bounded box."""

import argparse
import sys

from ntprover.experiments import chain_suite


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound", type=int, default=2)
    a = p.parse_args()
    r = chain_suite(a.count, a.seed, bound=a.bound)
    print(f"pairs={r.pairs} nonempty={r.nonempty} mismatches={len(r.mismatches)}")
    for t1, t2, size in r.mismatches:
        print(f"  {t1.cond} ; {t2.cond}: {size} pairs differ")
    return 0 if r.ok else 1


if __name__ == "__main__":
    sys.exit(main())
