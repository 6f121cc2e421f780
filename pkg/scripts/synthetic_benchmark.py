"""Five-texture benchmark: synthesize, extract, 2-fold cross-validate, print the report."""

import argparse
import logging

from asslda.config import Config
from asslda.experiments import synthetic_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workdir")
    ap.add_argument("--clips", type=int, default=20, help="clips per class")
    ap.add_argument("--duration", type=float, default=30.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--report", help="write the JSON report here")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    res = synthetic_benchmark(args.workdir, args.clips, args.duration, args.seed, Config(workers=args.workers))
    print(res.report.table())
    print(f"\nelapsed {res.seconds:.0f} s")
    if args.report:
        res.report.save(args.report)


if __name__ == "__main__":
    main()
