"""Compare accelerated loops with bounded transitive closures."""

import argparse
import sys

from ntprover.experiments import acceleration_suite


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    r = acceleration_suite(a.count, a.seed)
    print(f"loops={r.loops} accelerated={r.accelerated} failed={r.failed} mismatches={len(r.mismatches)}")
    for t, cond, size in r.mismatches:
        print(f"  {t.cond} -> {cond}: {size} pairs differ")
    return 0 if r.ok else 1


if __name__ == "__main__":
    sys.exit(main())
