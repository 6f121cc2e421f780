"""4-fold cross-validation on a local copy of the DCASE2016 task 1 development set."""

import argparse
import logging
import os

from asslda.config import Config
from asslda.manifest import dcase2016_manifest
from asslda.pipeline import FeatureStore, cross_validate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root", help="directory holding audio/ and evaluation_setup/")
    ap.add_argument("--cache", required=True)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--report")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    manifest = dcase2016_manifest(args.root)
    cfg = Config(profile="dcase", workers=args.workers)
    store = FeatureStore(args.cache, cfg)
    rep = store.extract(manifest)
    if rep.failed:
        print(f"{len(rep.failed)} files failed to decode")
    report = cross_validate(store, manifest, cfg)
    print(report.table())
    if args.report:
        report.save(args.report)


if __name__ == "__main__":
    main()
