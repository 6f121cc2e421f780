"""Command line interface: ``asslda {synth,extract,train,eval,cv,config,manifest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from asslda.config import Config
from asslda.manifest import Manifest, ManifestEntry, dcase2016_manifest
from asslda.pipeline import FeatureStore, TrainedModels, cross_validate, evaluate, train_pipeline
from asslda.synth import DEFAULT_CLASSES, SynthSpec, synthesize_textures

log = logging.getLogger("asslda")


def _config(args) -> Config:
    cfg = Config.load(args.config) if getattr(args, "config", None) else Config()
    overrides = {}
    for key in ("profile", "seg_len", "hop", "workers", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return cfg.replace(**overrides) if overrides else cfg


def _store(args, cfg: Config, manifest: Manifest) -> FeatureStore:
    store = FeatureStore(args.cache, cfg)
    rep = store.extract(manifest)
    log.info("features: %d computed, %d cached, %d failed",
             len(rep.computed), len(rep.cached), len(rep.failed))
    return store


def cmd_synth(args) -> int:
    spec = SynthSpec(
        classes=tuple(args.classes), clips_per_class=args.clips, duration=args.duration,
        sample_rate=args.sample_rate, folds=args.folds, channels=args.channels,
        transients_per_clip=tuple(args.transients), seed=args.seed,
    )
    m = synthesize_textures(spec, args.out)
    print(f"wrote {len(m)} clips and {Path(args.out) / 'manifest.csv'}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    manifest = Manifest.load(args.manifest)
    store = FeatureStore(args.cache, cfg)
    rep = store.extract(manifest)
    print(f"computed {len(rep.computed)}, cached {len(rep.cached)}, failed {len(rep.failed)} "
          f"(layout {store.layout_hash})")
    for path, why in rep.failed.items():
        print(f"  failed: {path}: {why}", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    manifest = Manifest.load(args.manifest).train_split(args.test_fold)
    if manifest.profile in ("litis", "dcase") and args.profile is None and not args.config:
        cfg = cfg.replace(profile=manifest.profile)
    models = train_pipeline(_store(args, cfg, manifest), manifest, cfg)
    models.save(args.model)
    print(f"trained on {len(manifest)} files: p={models.lda.p}, C={models.svm.C}, "
          f"gamma={models.svm.gamma}; saved to {args.model}")
    return 0


def cmd_eval(args) -> int:
    models = TrainedModels.load(args.model)
    manifest = Manifest.load(args.manifest).test_split(args.test_fold)
    report = evaluate(models, _store(args, models.config, manifest), manifest)
    print(report.table())
    if args.report:
        report.save(args.report)
    return 0


def cmd_cv(args) -> int:
    cfg = _config(args)
    manifest = Manifest.load(args.manifest)
    if manifest.profile in ("litis", "dcase") and args.profile is None and not args.config:
        cfg = cfg.replace(profile=manifest.profile)
    report = cross_validate(_store(args, cfg, manifest), manifest, cfg, args.folds)
    print(report.table())
    if args.report:
        report.save(args.report)
    return 0


def cmd_config(args) -> int:
    Config().save(args.out)
    print(f"wrote default configuration to {args.out}")
    return 0


def cmd_manifest(args) -> int:
    m = dcase2016_manifest(Path(args.root).resolve())
    # absolute paths so the manifest can live anywhere
    m = m.subset(ManifestEntry(str(m.resolve(e)), e.label, e.fold, e.location) for e in m.entries)
    m.save(args.out)
    print(f"wrote {len(m)} entries to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asslda", description="Acoustic scene classification from auditory summary statistics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cache=True):
        sp.add_argument("--config", help="INI config file (see `asslda config`)")
        sp.add_argument("--profile", choices=("litis", "dcase"), default=None)
        sp.add_argument("--seg-len", dest="seg_len", type=float, default=None)
        sp.add_argument("--hop", type=float, default=None)
        sp.add_argument("--workers", type=int, default=None)
        if cache:
            sp.add_argument("--cache", required=True, help="feature cache directory")

    sp = sub.add_parser("synth", help="generate a synthetic texture corpus")
    sp.add_argument("out")
    sp.add_argument("--classes", nargs="+", default=list(DEFAULT_CLASSES))
    sp.add_argument("--clips", type=int, default=20)
    sp.add_argument("--duration", type=float, default=30.0)
    sp.add_argument("--sample-rate", type=int, default=22050)
    sp.add_argument("--folds", type=int, default=2)
    sp.add_argument("--channels", type=int, default=1)
    sp.add_argument("--transients", type=int, nargs=2, default=(0, 0), metavar=("MIN", "MAX"))
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("extract", help="compute and cache ASS-vectors for a manifest")
    sp.add_argument("manifest")
    common(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("train", help="fit LDA + SVM on a training split")
    sp.add_argument("manifest")
    sp.add_argument("--model", required=True, help="output model directory")
    sp.add_argument("--test-fold", type=int, default=None, help="hold this fold out")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a trained model on a test split")
    sp.add_argument("model")
    sp.add_argument("manifest")
    sp.add_argument("--test-fold", type=int, default=None, help="evaluate only this fold")
    sp.add_argument("--report", help="JSON report path (a .txt table is written next to it)")
    sp.add_argument("--cache", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("cv", help="leave-one-fold-out cross-validation")
    sp.add_argument("manifest")
    sp.add_argument("--folds", type=int, nargs="+", default=None)
    sp.add_argument("--report")
    common(sp)
    sp.set_defaults(func=cmd_cv)

    sp = sub.add_parser("config", help="write the default configuration file")
    sp.add_argument("out")
    sp.set_defaults(func=cmd_config)

    sp = sub.add_parser("manifest", help="build a manifest from a DCASE2016 development set")
    sp.add_argument("root")
    sp.add_argument("out")
    sp.set_defaults(func=cmd_manifest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
