"""Differential run of the engine against the fragment oracle.

    python scripts/run_fuzz.py --seed 42 --trials 500 --reproducers out/
"""

import argparse
import logging
import sys

from normbpa.harness import FuzzParams, fuzz_compare


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--pairs", type=int, default=24)
    ap.add_argument("--reproducers", metavar="DIR")
    ap.add_argument("--quiet", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)

    def progress(rec):
        if not args.quiet and (rec.index + 1) % 50 == 0:
            print(f"  {rec.index + 1} trials", file=sys.stderr)

    report = fuzz_compare(FuzzParams(seed=args.seed, trials=args.trials, pairs=args.pairs), args.reproducers, progress)
    print(report.summary())
    for m in report.mismatches:
        print("mismatch", m)
    for p in report.problems:
        print("property", p)
    for t in report.errors:
        print("error", t.index, t.error)
    return 0 if report.clean else 3


if __name__ == "__main__":
    raise SystemExit(main())
