"""Run every differential property over a random corpus and print one report
per property. Exits non-zero if any counterexample turns up."""

import argparse
import sys
import time

from colsem.harness import GeneratorConfig, run_checks

PROPS = ("51", "52", "2vl", "nullfree", "size")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--null-probability", type=float, default=0.3)
    ap.add_argument("--out", help="directory for counterexample bundles")
    args = ap.parse_args()

    failed = False
    for prop in PROPS:
        p = 0.0 if prop == "nullfree" else args.null_probability
        start = time.perf_counter()
        report = run_checks(prop, args.trials, args.seed, GeneratorConfig(null_probability=p), args.workers)
        print(f"{report.text()}  [{time.perf_counter() - start:.1f} s]")
        for cx in report.counterexamples:
            if args.out:
                cx.write(f"{args.out}/prop{prop}-{cx.seed}")
        failed |= not report.ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
