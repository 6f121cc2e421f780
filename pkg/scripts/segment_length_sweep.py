"""Accuracy against segment length on scene-like mixtures with rare loud transients."""

import argparse
import json
import logging

from asslda.experiments import segment_length_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("workdir")
    ap.add_argument("--seg-lens", type=float, nargs="+", default=[2.0, 5.0, 10.0, 30.0])
    ap.add_argument("--clips", type=int, default=12, help="clips per class")
    ap.add_argument("--transients", type=int, nargs=2, default=(1, 3), metavar=("MIN", "MAX"))
    ap.add_argument("--gain", type=float, default=8.0, help="transient peak relative to texture RMS")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--json", help="write accuracies here")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    res = segment_length_comparison(args.workdir, args.seg_lens, args.clips, args.transients, args.gain, args.seed)
    print(f"{'seg_len':>8} {'hop':>6} {'accuracy':>9} {'mAP':>7} {'seconds':>8}")
    for seg, r in res.items():
        print(f"{seg:>8.1f} {seg / 2:>6.1f} {r.report.accuracy:>9.4f} "
              f"{r.report.mean_average_precision:>7.4f} {r.seconds:>8.0f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({str(k): v.report.to_dict() for k, v in res.items()}, fh, indent=1)


if __name__ == "__main__":
    main()
