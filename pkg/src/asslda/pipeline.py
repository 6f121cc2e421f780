"""End-to-end orchestration: feature cache, training, evaluation, cross-validation."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from asslda import lda as lda_mod
from asslda import svm as svm_mod
from asslda.audio_io import AudioDecodeError, SegmentationError, decode, resample, segment
from asslda.config import DEFAULT, Config
from asslda.manifest import Manifest
from asslda.stats import FeatureLayout, compute_ass_vector

log = logging.getLogger(__name__)

CACHE_VERSION = 1


class StaleFeaturesError(RuntimeError):
    """Features and models were produced under different layouts."""


@dataclass(frozen=True)
class FileFeatures:
    """All segment vectors of one file: ``features[ch]`` is (segments, dim)."""
    path: str
    features: tuple[np.ndarray, ...]
    start_times: np.ndarray
    layout_hash: str

    @property
    def num_segments(self) -> int:
        return sum(len(f) for f in self.features)

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.features, axis=0)


def extract_file(path: str | Path, cfg: Config = DEFAULT) -> FileFeatures:
    """decode -> resample -> segment -> front end -> statistics, per channel."""
    layout = FeatureLayout.from_config(cfg)
    feats, starts = [], None
    for clip in decode(path):
        clip = resample(clip, cfg.sample_rate)
        segs = segment(clip, cfg.seg_len, cfg.hop)
        rows = [compute_ass_vector(s.samples, s.sample_rate, cfg, layout).values for s in segs]
        feats.append(np.stack(rows))
        starts = np.array([s.start_time for s in segs])
    return FileFeatures(str(path), tuple(feats), starts, layout.hash)


@dataclass
class ExtractionReport:
    computed: list[str] = field(default_factory=list)
    cached: list[str] = field(default_factory=list)
    failed: dict[str, str] = field(default_factory=dict)


class FeatureStore:
    """Per-file feature cache keyed by (absolute path, layout hash).

    One ``.npz`` per file holds every channel; the layout hash and the source
    file's size and mtime are embedded and checked on read.
    """

    def __init__(self, cache_dir: str | Path | None, cfg: Config = DEFAULT):
        self.cfg = cfg
        self.layout = FeatureLayout.from_config(cfg)
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self._mem: dict[str, FileFeatures] = {}
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            with open(self.cache_dir / "layout.json", "w", encoding="utf-8") as fh:
                json.dump({**self.layout.to_dict(), "hash": self.layout.hash,
                           "config": self.cfg.to_dict()}, fh, indent=1)

    @property
    def layout_hash(self) -> str:
        return self.layout.hash

    def _cache_path(self, path: Path) -> Path:
        key = hashlib.sha1(str(path.resolve()).encode()).hexdigest()[:20]
        return self.cache_dir / f"{path.stem[:40]}-{key}-{self.layout_hash}.npz"

    def _read(self, path: Path) -> FileFeatures | None:
        cp = self._cache_path(path)
        if not cp.exists():
            return None
        try:
            with np.load(cp, allow_pickle=False) as z:
                meta = json.loads(str(z["meta"]))
                st = path.stat()
                if (meta["version"] != CACHE_VERSION or meta["layout_hash"] != self.layout_hash
                        or meta["size"] != st.st_size or meta["mtime_ns"] != st.st_mtime_ns):
                    return None
                feats = tuple(z[f"ch{c}"] for c in range(meta["channels"]))
                return FileFeatures(str(path), feats, z["start_times"], meta["layout_hash"])
        except (OSError, KeyError, ValueError):
            return None

    def _write(self, path: Path, ff: FileFeatures) -> None:
        st = path.stat()
        meta = {"version": CACHE_VERSION, "layout_hash": ff.layout_hash, "source": str(path.resolve()),
                "channels": len(ff.features), "size": st.st_size, "mtime_ns": st.st_mtime_ns}
        arrays = {f"ch{c}": np.asarray(f, dtype="<f8") for c, f in enumerate(ff.features)}
        target = self._cache_path(path)
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.savez(fh, meta=np.array(json.dumps(meta)),
                         start_times=np.asarray(ff.start_times, dtype="<f8"), **arrays)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get(self, path: str | Path) -> FileFeatures:
        key = str(path)
        if key in self._mem:
            return self._mem[key]
        ff = self._read(Path(path)) if self.cache_dir is not None else None
        if ff is None:
            raise KeyError(f"no features for {path}; run extract first")
        self._mem[key] = ff
        return ff

    def extract(self, manifest: Manifest, workers: int | None = None) -> ExtractionReport:
        """Compute features for every manifest file that is not already cached.

        Unreadable or too-short files are collected in the report; the call
        only fails when every file fails.
        """
        report = ExtractionReport()
        todo = []
        for e in manifest.entries:
            p = manifest.resolve(e)
            cached = self._read(p) if self.cache_dir is not None else None
            if cached is None and str(p) in self._mem:
                cached = self._mem[str(p)]
            if cached is not None:
                self._mem[str(p)] = cached
                report.cached.append(str(p))
            else:
                todo.append(p)
        workers = workers or self.cfg.workers
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_safe_extract, todo, [self.cfg] * len(todo)))
        else:
            results = [_safe_extract(p, self.cfg) for p in todo]
        for p, res in zip(todo, results):
            if isinstance(res, str):
                report.failed[str(p)] = res
                log.warning("skipping %s: %s", p, res)
                continue
            self._mem[str(p)] = res
            if self.cache_dir is not None:
                self._write(p, res)
            report.computed.append(str(p))
        if manifest.entries and len(report.failed) == len(manifest.entries):
            raise RuntimeError(f"feature extraction failed for all {len(manifest)} files")
        return report

    def available(self, manifest: Manifest) -> list[tuple]:
        """(entry, FileFeatures) for every manifest entry with features."""
        out = []
        for e in manifest.entries:
            try:
                out.append((e, self.get(manifest.resolve(e))))
            except KeyError:
                continue
        return out


def _safe_extract(path: Path, cfg: Config):
    try:
        return extract_file(path, cfg)
    except (AudioDecodeError, SegmentationError) as exc:
        return str(exc)


@dataclass(frozen=True)
class TrainedModels:
    lda: lda_mod.LdaModel
    svm: svm_mod.SvmModel
    config: Config
    layout_hash: str

    def transform(self, X: np.ndarray) -> np.ndarray:
        """ASS-vectors -> scaled ASS-LDA features."""
        return svm_mod.apply_scaler(self.svm.scaler, lda_mod.project(self.lda, X))

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.lda.save(d / "lda.npz")
        self.svm.save(d / "svm.npz")
        self.config.save(d / "config.ini")
        with open(d / "model.json", "w", encoding="utf-8") as fh:
            json.dump({"version": 1, "layout_hash": self.layout_hash}, fh)

    @classmethod
    def load(cls, directory: str | Path) -> "TrainedModels":
        d = Path(directory)
        with open(d / "model.json", encoding="utf-8") as fh:
            meta = json.load(fh)
        return cls(lda_mod.LdaModel.load(d / "lda.npz"), svm_mod.SvmModel.load(d / "svm.npz"),
                   Config.load(d / "config.ini"), meta["layout_hash"])


def training_matrix(store: FeatureStore, manifest: Manifest) -> tuple[np.ndarray, np.ndarray]:
    """Every segment of every channel becomes one labelled row."""
    X, y = [], []
    for e, ff in store.available(manifest):
        rows = ff.stacked()
        X.append(rows)
        y.extend([e.label] * len(rows))
    if not X:
        raise ValueError("training split is empty")
    return np.concatenate(X), np.array(y)


def train_pipeline(store: FeatureStore, manifest: Manifest, cfg: Config | None = None) -> TrainedModels:
    """LDA on training ASS-vectors, then scaler and SVM on the projected features."""
    cfg = cfg or store.cfg
    if len(manifest) == 0:
        raise ValueError("training split is empty")
    X, y = training_matrix(store, manifest)
    if len(set(y.tolist())) < 2:
        raise ValueError("training split must cover at least two classes")
    lda_model = lda_mod.fit_lda(X, y, cfg.lda_dim or None, cfg.lda_reg, store.layout_hash)
    V = lda_mod.project(lda_model, X)
    scaler = svm_mod.fit_scaler(V)
    svm_model = svm_mod.train(svm_mod.apply_scaler(scaler, V), y, cfg.C, cfg.gamma,
                              cfg.svm_tol, cfg.svm_cache_mb, scaler=scaler)
    return TrainedModels(lda_model, svm_model, cfg, store.layout_hash)


@dataclass
class EvalReport:
    classes: tuple
    confusion: np.ndarray  # rows: true, columns: predicted
    predictions: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    folds: list["EvalReport"] = field(default_factory=list)

    @property
    def num_files(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        n = self.confusion.sum()
        return float(np.trace(self.confusion) / n) if n else 0.0

    @property
    def per_class_accuracy(self) -> dict:
        out = {}
        for k, c in enumerate(self.classes):
            n = self.confusion[k].sum()
            if n:
                out[c] = float(self.confusion[k, k] / n)
        return out

    @property
    def mean_average_precision(self) -> float:
        """Class-mean accuracy over classes present in the test split."""
        acc = list(self.per_class_accuracy.values())
        return float(np.mean(acc)) if acc else 0.0

    @property
    def fold_accuracies(self) -> list[float]:
        return [f.accuracy for f in self.folds]

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "mAP (class-mean accuracy)": self.mean_average_precision,
            "per_class_accuracy": self.per_class_accuracy,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "num_files": self.num_files,
            "config": self.config,
            "predictions": self.predictions,
        }
        if self.folds:
            d["folds"] = [f.to_dict() for f in self.folds]
            d["fold_accuracies"] = self.fold_accuracies
            d["mean_fold_accuracy"] = float(np.mean(self.fold_accuracies))
            d["mean_fold_mAP"] = float(np.mean([f.mean_average_precision for f in self.folds]))
        return d

    def table(self) -> str:
        w = max([len(str(c)) for c in self.classes] + [5])
        lines = [f"files: {self.num_files}   accuracy: {self.accuracy:.4f}   "
                 f"mAP (class-mean accuracy): {self.mean_average_precision:.4f}"]
        if self.folds:
            lines.append("fold accuracies: " + ", ".join(f"{a:.4f}" for a in self.fold_accuracies)
                         + f"   mean: {np.mean(self.fold_accuracies):.4f}")
        lines.append("")
        lines.append(" " * (w + 2) + " ".join(f"{str(c)[:6]:>6}" for c in self.classes) + "   acc")
        pca = self.per_class_accuracy
        for k, c in enumerate(self.classes):
            row = " ".join(f"{v:>6d}" for v in self.confusion[k])
            acc = f"{pca[c]:.3f}" if c in pca else "  -  "
            lines.append(f"{str(c):>{w}}  {row}   {acc}")
        return "\n".join(lines)

    def save(self, path: str | Path) -> None:
        """Write ``<path>`` as JSON and ``<path>.txt`` as a readable table."""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
        path.with_suffix(path.suffix + ".txt").write_text(self.table() + "\n", encoding="utf-8")


def confusion_matrix(true, pred, classes) -> np.ndarray:
    pos = {c: k for k, c in enumerate(classes)}
    M = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(true, pred):
        M[pos[t], pos[p]] += 1
    return M


def config_echo(cfg: Config, models: TrainedModels | None = None) -> dict:
    d = {"seg_len": cfg.seg_len, "hop": cfg.hop, "C": cfg.C, "gamma": cfg.gamma,
         "lda_reg": cfg.lda_reg}
    if models is not None:
        d.update(p=models.lda.p, eps=models.lda.regularization_eps, layout_hash=models.layout_hash)
    return d


def evaluate(models: TrainedModels, store: FeatureStore, manifest: Manifest) -> EvalReport:
    """Project, scale and classify every segment, then vote per file."""
    if models.layout_hash != store.layout_hash:
        raise StaleFeaturesError(
            f"model layout {models.layout_hash} does not match feature layout {store.layout_hash}")
    classes = tuple(sorted(set(models.svm.classes) | set(manifest.classes)))
    true, pred, records = [], [], []
    for e, ff in store.available(manifest):
        labels, margins = models.svm.predict(models.transform(ff.stacked()))
        vr = svm_mod.vote_file(labels, margins, models.svm.classes)
        true.append(e.label)
        pred.append(vr.label)
        records.append({"path": e.path, "label": e.label, "predicted": vr.label,
                        "votes": dict(zip(vr.classes, vr.votes.tolist())),
                        "tie_broken": vr.tie_broken})
    return EvalReport(classes, confusion_matrix(true, pred, classes), records,
                      config_echo(models.config, models))


def cross_validate(store: FeatureStore, manifest: Manifest, cfg: Config | None = None,
                   folds=None) -> EvalReport:
    """Leave-one-fold-out over the manifest folds; the pooled report carries per-fold reports."""
    cfg = cfg or store.cfg
    folds = list(folds) if folds is not None else list(manifest.folds)
    if len(folds) < 2 and folds == list(manifest.folds):
        raise ValueError("cross-validation needs at least two folds")
    reports = []
    for k in folds:
        models = train_pipeline(store, manifest.train_split(k), cfg)
        rep = evaluate(models, store, manifest.test_split(k))
        rep.config["fold"] = k
        reports.append(rep)
        log.info("fold %s: accuracy %.4f", k, rep.accuracy)
    classes = tuple(sorted(set().union(*[r.classes for r in reports])))
    total = np.zeros((len(classes), len(classes)), dtype=int)
    preds = []
    for r in reports:
        idx = [classes.index(c) for c in r.classes]
        total[np.ix_(idx, idx)] += r.confusion
        preds.extend(r.predictions)
    echo = {**config_echo(cfg), "layout_hash": store.layout_hash, "p": reports[0].config.get("p")}
    return EvalReport(classes, total, preds, echo, reports)
