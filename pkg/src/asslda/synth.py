"""Synthetic stationary texture corpora for desk-scale benchmarking.

Every clip is drawn from its own ``SeedSequence((seed, class, index))`` so a
corpus is byte-identical for a fixed seed regardless of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from asslda.audio_io import encode
from asslda.manifest import Manifest, ManifestEntry

DEFAULT_CLASSES = ("white", "pink", "am4", "am32", "bandpass")


def _colored(rng, n: int, sr: int, exponent: float) -> np.ndarray:
    """Gaussian noise with power spectrum proportional to f**-exponent."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sr)
    f[0] = f[1]
    spec *= f ** (-exponent / 2.0)
    return np.fft.irfft(spec, n=n)


def _bandpass(rng, n: int, sr: int, lo: float, hi: float) -> np.ndarray:
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sr)
    spec[(f < lo) | (f > hi)] = 0.0
    return np.fft.irfft(spec, n=n)


def _am(rng, n: int, sr: int, rate: float, depth: float) -> np.ndarray:
    t = np.arange(n) / sr
    phase = rng.uniform(0, 2 * np.pi)
    return (1.0 + depth * np.sin(2 * np.pi * rate * t + phase)) * rng.standard_normal(n)


def _unit(x: np.ndarray) -> np.ndarray:
    return x / (np.sqrt(np.mean(x ** 2)) + 1e-12)


def texture(kind: str, rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    """One unit-RMS texture of the named kind with mild per-clip variation."""
    if kind == "white":
        x = rng.standard_normal(n)
    elif kind == "pink":
        x = _colored(rng, n, sr, rng.uniform(0.9, 1.1))
    elif kind == "brown":
        x = _colored(rng, n, sr, rng.uniform(1.8, 2.2))
    elif kind == "am4":
        x = _am(rng, n, sr, 4.0, rng.uniform(0.6, 0.9))
    elif kind == "am32":
        x = _am(rng, n, sr, 32.0, rng.uniform(0.6, 0.9))
    elif kind == "bandpass":
        x = _bandpass(rng, n, sr, 200.0, 800.0)
    elif kind.startswith("mix:"):
        # mix:<kind>+<kind>[+...] equal-power mixture
        parts = kind[4:].split("+")
        x = sum(_unit(texture(p, rng, n, sr)) for p in parts)
    else:
        raise ValueError(f"unknown texture kind {kind!r}")
    return _unit(x)


def inject_transients(x: np.ndarray, rng: np.random.Generator, sr: int, count: int,
                      gain: float = 6.0, duration: float = 0.4) -> np.ndarray:
    """Add ``count`` loud, short tone-burst events at random positions."""
    y = x.copy()
    width = int(duration * sr)
    t = np.arange(width) / sr
    win = np.hanning(width)
    for _ in range(count):
        start = int(rng.integers(0, len(x) - width))
        f0 = rng.uniform(1500.0, 6000.0)
        burst = win * (np.sin(2 * np.pi * f0 * t) + 0.5 * np.sin(2 * np.pi * 2.3 * f0 * t))
        y[start:start + width] += gain * burst
    return y


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[str, ...] = DEFAULT_CLASSES
    kinds: dict = field(default_factory=dict)  # class name -> texture kind, defaults to the name
    clips_per_class: int = 20
    duration: float = 30.0
    sample_rate: int = 22050
    folds: int = 2
    channels: int = 1
    transients_per_clip: tuple[int, int] = (0, 0)  # inclusive range
    transient_gain: float = 6.0
    peak: float = 0.5
    seed: int = 0

    def kind(self, cls: str) -> str:
        return self.kinds.get(cls, cls)


def synth_clip(spec: SynthSpec, class_index: int, clip_index: int) -> np.ndarray:
    """Samples for one clip, shape (n,) or (n, channels)."""
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, class_index, clip_index)))
    n = int(round(spec.duration * spec.sample_rate))
    kind = spec.kind(spec.classes[class_index])
    level = 10 ** (rng.uniform(-6.0, 0.0) / 20.0)
    chans = []
    for _ in range(spec.channels):
        x = texture(kind, rng, n, spec.sample_rate)
        lo, hi = spec.transients_per_clip
        count = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
        if count:
            x = inject_transients(x, rng, spec.sample_rate, count, spec.transient_gain)
        chans.append(x)
    out = np.stack(chans, axis=1)
    out *= level * spec.peak / np.max(np.abs(out))
    return out[:, 0] if spec.channels == 1 else out


def synthesize_textures(spec: SynthSpec, out_dir: str | Path) -> Manifest:
    """Write the corpus as 16-bit WAVs plus ``manifest.csv`` and return the manifest.

    Clip ``k`` of each class goes to fold ``k % spec.folds`` so folds are
    balanced per class.
    """
    if len(spec.classes) < 2:
        raise ValueError("need at least two texture classes")
    if spec.clips_per_class < 1 or spec.folds < 1:
        raise ValueError("clips_per_class and folds must be positive")
    for c in spec.classes:
        texture(spec.kind(c), np.random.default_rng(0), 64, spec.sample_rate)  # validates kinds early
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for ci, cls in enumerate(spec.classes):
        for k in range(spec.clips_per_class):
            name = f"{cls}_{k:03d}.wav"
            encode(out / name, synth_clip(spec, ci, k), spec.sample_rate, bits=16)
            entries.append(ManifestEntry(name, cls, k % spec.folds, f"{cls}-{k}"))
    manifest = Manifest(entries, profile="synthetic", root=out)
    manifest.save(out / "manifest.csv")
    return manifest
