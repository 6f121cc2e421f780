import json
import os

import numpy as np
import pytest

from asslda.audio_io import encode
from asslda.cli import main
from asslda.config import Config
from asslda.frontend import modulation_filterbank
from asslda.manifest import Manifest, ManifestEntry, dcase2016_manifest, from_split
from asslda.pipeline import (
    EvalReport, FeatureStore, StaleFeaturesError, TrainedModels, confusion_matrix, cross_validate, evaluate,
    extract_file, train_pipeline,
)
from asslda.stats import compute_ass_vector
from asslda.synth import SynthSpec, synth_clip, synthesize_textures

SMALL = SynthSpec(classes=("white", "am4"), clips_per_class=4, duration=4.0, folds=2, seed=3)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    synthesize_textures(SMALL, root)
    return root


def test_manifest_round_trip(tmp_path):
    m = Manifest([ManifestEntry("a.wav", "bus", 1, "loc1"), ManifestEntry("sub/b.wav", "park", 2)],
                 profile="dcase")
    m.save(tmp_path / "m.csv")
    back = Manifest.load(tmp_path / "m.csv")
    assert back.entries == m.entries and back.profile == "dcase"
    assert back.resolve(back.entries[1]) == tmp_path / "sub" / "b.wav"
    assert back.train_split(1).entries == [m.entries[1]]
    assert back.test_split(1).entries == [m.entries[0]]


def test_manifest_rejects_duplicates_and_missing_columns(tmp_path):
    with pytest.raises(ValueError):
        Manifest([ManifestEntry("a.wav", "x", 0), ManifestEntry("a.wav", "y", 1)])
    (tmp_path / "bad.csv").write_text("path,label\na.wav,x\n")
    with pytest.raises(ValueError, match="fold"):
        Manifest.load(tmp_path / "bad.csv")


def test_dcase_adapter(tmp_path):
    setup = tmp_path / "evaluation_setup"
    setup.mkdir()
    for k in range(1, 5):
        (setup / f"fold{k}_evaluate.txt").write_text(f"audio/f{k}a.wav\tbus\naudio/f{k}b.wav\tpark\n")
    m = dcase2016_manifest(tmp_path)
    assert len(m) == 8 and m.folds == (1, 2, 3, 4) and m.profile == "dcase"
    assert m.classes == ("bus", "park")


def test_split_adapter():
    m = from_split("/data", [("a.wav", "x")], [("b.wav", "y")])
    assert m.train_split(1).entries[0].path == "a.wav" and m.profile == "litis"


def test_synth_is_byte_identical(tmp_path):
    spec = SynthSpec(classes=("pink", "bandpass"), clips_per_class=2, duration=2.0, seed=11)
    synthesize_textures(spec, tmp_path / "a")
    synthesize_textures(spec, tmp_path / "b")
    for name in ("pink_000.wav", "bandpass_001.wav", "manifest.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_synth_manifest_layout(tmp_path):
    spec = SynthSpec(clips_per_class=20, duration=0.1)
    m = synthesize_textures(spec, tmp_path)
    assert len(m) == 100 and m.classes == tuple(sorted(spec.classes))
    for c in spec.classes:
        folds = [e.fold for e in m.entries if e.label == c]
        assert folds.count(0) == folds.count(1) == 10
    with pytest.raises(ValueError):
        synthesize_textures(SynthSpec(classes=("white",)), tmp_path / "x")
    with pytest.raises(ValueError):
        synthesize_textures(SynthSpec(classes=("white", "nope"), duration=0.1), tmp_path / "y")


def test_am4_texture_peaks_in_4hz_band():
    mfb = modulation_filterbank(400, 800)
    b4 = int(np.argmax(mfb.response_at(4.0)[:, 0]))
    x = synth_clip(SynthSpec(duration=2.0), 2, 0)  # class "am4"
    power = compute_ass_vector(x, 22050).group("modulation_power").reshape(32, 20)
    assert np.all(np.argmax(power[8:24], axis=1) == b4)


def test_stereo_file_gives_58_vectors(tmp_path):
    rng = np.random.default_rng(0)
    encode(tmp_path / "st.wav", 0.1 * rng.standard_normal((30 * 22050, 2)), 22050)
    ff = extract_file(tmp_path / "st.wav")
    assert len(ff.features) == 2 and ff.num_segments == 58
    assert ff.stacked().shape == (58, 1323)
    np.testing.assert_allclose(ff.start_times[:3], [0, 1, 2])


def test_extract_resamples_other_rates(tmp_path):
    x = 0.1 * np.random.default_rng(1).standard_normal(3 * 44100)
    encode(tmp_path / "hi.wav", x, 44100)
    ff = extract_file(tmp_path / "hi.wav")
    assert ff.num_segments == 2


def test_cache_hits_and_misses(small_corpus, tmp_path):
    m = Manifest.load(small_corpus / "manifest.csv")
    cache = tmp_path / "cache"
    first = FeatureStore(cache).extract(m)
    assert len(first.computed) == len(m) and not first.cached
    again = FeatureStore(cache).extract(m)
    assert len(again.computed) == 0 and len(again.cached) == len(m)
    changed = FeatureStore(cache, Config(seg_len=3.0, hop=1.0)).extract(m)
    assert len(changed.computed) == len(m)
    # touched source file is recomputed
    p = m.resolve(m.entries[0])
    p.write_bytes(p.read_bytes())
    os.utime(p, ns=(p.stat().st_atime_ns, p.stat().st_mtime_ns + 10 ** 9))
    assert FeatureStore(cache).extract(m).computed == [str(p)]
    assert not list(cache.glob("*.tmp"))


def test_extraction_failures_are_collected(small_corpus, tmp_path):
    m = Manifest.load(small_corpus / "manifest.csv")
    (tmp_path / "broken.wav").write_bytes(b"not a wav")
    encode(tmp_path / "short.wav", np.zeros(1000), 22050)
    bad = [ManifestEntry(str(tmp_path / "broken.wav"), "white", 0), ManifestEntry(str(tmp_path / "short.wav"), "am4", 1)]
    rep = FeatureStore(None).extract(m.subset(list(m.entries[:1]) + bad))
    assert len(rep.failed) == 2 and len(rep.computed) == 1
    with pytest.raises(RuntimeError):
        FeatureStore(None).extract(m.subset(bad))


def test_empty_train_split_rejected(small_corpus):
    m = Manifest.load(small_corpus / "manifest.csv")
    store = FeatureStore(None)
    with pytest.raises(ValueError, match="empty"):
        train_pipeline(store, m.subset([]))


def test_train_evaluate_and_hygiene(small_corpus, tmp_path):
    m = Manifest.load(small_corpus / "manifest.csv")
    store = FeatureStore(tmp_path / "c")
    store.extract(m)
    models = train_pipeline(store, m.train_split(1))
    assert models.lda.p == 1 and models.svm.C == 4 and models.svm.gamma == 2
    own = evaluate(models, store, m.train_split(1))
    assert own.accuracy == 1.0 and own.mean_average_precision == 1.0
    assert np.array_equal(own.confusion, np.diag(np.diag(own.confusion)))
    models.save(tmp_path / "model")
    back = TrainedModels.load(tmp_path / "model")
    held = evaluate(back, store, m.test_split(1))
    assert held.to_dict() == evaluate(models, store, m.test_split(1)).to_dict()
    other = FeatureStore(None, Config(seg_len=3.0))
    with pytest.raises(StaleFeaturesError):
        evaluate(models, other, m.test_split(1))


def test_metrics_example():
    true = ["A", "A", "A", "A", "B", "B"]
    pred = ["A", "A", "A", "B", "B", "A"]
    rep = EvalReport(("A", "B"), confusion_matrix(true, pred, ("A", "B")))
    assert rep.accuracy == pytest.approx(4 / 6)
    assert rep.mean_average_precision == pytest.approx(0.625)
    assert rep.confusion.sum(axis=1).tolist() == [4, 2]
    assert "mAP (class-mean accuracy)" in rep.to_dict()


def test_cross_validation_reports_folds(small_corpus, tmp_path):
    m = Manifest.load(small_corpus / "manifest.csv")
    store = FeatureStore(tmp_path / "c")
    store.extract(m)
    rep = cross_validate(store, m)
    assert len(rep.folds) == 2 and rep.num_files == len(m)
    assert rep.accuracy == pytest.approx(np.trace(rep.confusion) / rep.confusion.sum())
    assert 0 <= rep.mean_average_precision <= 1
    assert rep.config["layout_hash"] == store.layout_hash and rep.config["p"] == 1
    again = cross_validate(store, m)
    assert again.to_dict() == rep.to_dict()
    rep.save(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["fold_accuracies"] == rep.fold_accuracies
    assert "accuracy" in (tmp_path / "r.json.txt").read_text()


def test_config_round_trip(tmp_path):
    cfg = Config(seg_len=30.0, hop=15.0, profile="dcase", env_corr_offsets=(1, 2), lda_reg=1e-4)
    cfg.save(tmp_path / "c.ini")
    back = Config.load(tmp_path / "c.ini")
    assert back == cfg and back.C == 2 and back.gamma == 4


def test_cli_end_to_end(tmp_path, capsys):
    corpus, cache = tmp_path / "corpus", tmp_path / "cache"
    assert main(["synth", str(corpus), "--classes", "white", "am32", "--clips", "2", "--duration", "3"]) == 0
    man = str(corpus / "manifest.csv")
    assert main(["extract", man, "--cache", str(cache)]) == 0
    assert main(["train", man, "--test-fold", "1", "--model", str(tmp_path / "model"), "--cache", str(cache)]) == 0
    assert main(["eval", str(tmp_path / "model"), man, "--test-fold", "1", "--cache", str(cache),
                 "--report", str(tmp_path / "eval.json")]) == 0
    assert main(["cv", man, "--cache", str(cache), "--report", str(tmp_path / "cv.json")]) == 0
    assert main(["config", str(tmp_path / "default.ini")]) == 0
    out = capsys.readouterr().out
    assert "computed 4, cached 0" in out and "accuracy" in out
    assert json.loads((tmp_path / "cv.json").read_text())["num_files"] == 4
    assert Config.load(tmp_path / "default.ini") == Config()
