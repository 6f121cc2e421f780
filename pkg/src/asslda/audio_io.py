"""WAV decoding, resampling and segmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal


class AudioDecodeError(RuntimeError):
    """Raised when a file cannot be read as PCM WAV."""


class SegmentationError(ValueError):
    """Raised when a clip is too short to yield a single segment."""


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_id: str = ""
    channel_index: int = 0
    label: str | None = None

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Segment:
    samples: np.ndarray
    sample_rate: int
    start_time: float
    source_id: str = ""
    channel_index: int = 0
    label: str | None = None

    @property
    def parent(self) -> tuple[str, int]:
        return self.source_id, self.channel_index


def _to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if np.issubdtype(data.dtype, np.integer):
        # scipy returns 24-bit PCM left-justified in int32, so 2**31 is right for both
        bits = data.dtype.itemsize * 8
        return data.astype(np.float64) / float(2 ** (bits - 1))
    return np.clip(data.astype(np.float64), -1.0, 1.0)


def decode(path: str | Path, label: str | None = None) -> list[AudioClip]:
    """Decode a PCM WAV file into one clip per channel.

    Integer PCM is scaled by ``1 / 2**(bits - 1)``; IEEE float data is
    clipped to [-1, 1].
    """
    path = Path(path)
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError as exc:
        raise AudioDecodeError(f"{path}: file not found") from exc
    except (ValueError, OSError, EOFError) as exc:
        raise AudioDecodeError(f"{path}: unsupported or unreadable WAV ({exc})") from exc
    x = _to_float(data)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise AudioDecodeError(f"{path}: non-finite samples")
    return [
        AudioClip(np.ascontiguousarray(x[:, ch]), int(rate), str(path), ch, label)
        for ch in range(x.shape[1])
    ]


def encode(path: str | Path, samples: np.ndarray, sample_rate: int, bits: int = 16) -> None:
    """Write float samples in [-1, 1] as PCM WAV (16/24 bit int or 32 bit float).

    ``samples`` may be 1-D (mono) or ``(n, channels)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if bits == 32:
        scipy.io.wavfile.write(path, sample_rate, x.astype(np.float32))
        return
    if bits not in (16, 24):
        raise ValueError(f"unsupported bit depth {bits}")
    scale = 2 ** (bits - 1)
    q = np.clip(np.round(x * scale), -scale, scale - 1).astype(np.int64)
    if bits == 16:
        scipy.io.wavfile.write(path, sample_rate, q.astype(np.int16))
    else:
        _write_pcm24(path, sample_rate, q)


def _write_pcm24(path, sample_rate: int, q: np.ndarray) -> None:
    # scipy cannot write 24-bit, so emit the RIFF header by hand
    q = q.reshape(len(q), -1)
    nch = q.shape[1]
    raw = q.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    block = 3 * nch
    header = b"".join([
        b"RIFF", (36 + len(raw)).to_bytes(4, "little"), b"WAVE",
        b"fmt ", (16).to_bytes(4, "little"), (1).to_bytes(2, "little"),
        nch.to_bytes(2, "little"), sample_rate.to_bytes(4, "little"),
        (sample_rate * block).to_bytes(4, "little"), block.to_bytes(2, "little"),
        (24).to_bytes(2, "little"), b"data", len(raw).to_bytes(4, "little"),
    ])
    with open(path, "wb") as fh:
        fh.write(header + raw)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited polyphase resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    y = resample_array(clip.samples, clip.sample_rate, target_rate)
    return AudioClip(y, int(target_rate), clip.source_id, clip.channel_index, clip.label)


def resample_array(x: np.ndarray, rate_in: float, rate_out: float, axis: int = -1) -> np.ndarray:
    ratio = Fraction(int(rate_out), int(rate_in))
    # Kaiser beta 8.6 gives >80 dB stopband for the default polyphase filter
    return scipy.signal.resample_poly(
        x, ratio.numerator, ratio.denominator, axis=axis,
        window=("kaiser", 8.6), padtype="line",
    )


def segment_count(duration: float, seg_len: float, hop: float, sample_rate: int) -> int:
    tol = 0.5 / sample_rate
    if duration + tol < seg_len:
        return 0
    return int(math.floor((duration - seg_len + tol) / hop)) + 1


def segment(clip: AudioClip, seg_len: float, hop_size: float) -> list[Segment]:
    """Slice ``clip`` into ``seg_len``-second windows every ``hop_size`` seconds."""
    if seg_len <= 0 or hop_size <= 0:
        raise ValueError("seg_len and hop_size must be positive")
    sr = clip.sample_rate
    n = segment_count(clip.duration, seg_len, hop_size, sr)
    if n == 0:
        raise SegmentationError(
            f"{clip.source_id}: clip of {clip.duration:.3f} s is shorter than seg_len={seg_len} s")
    width = int(round(seg_len * sr))
    out = []
    for k in range(n):
        start = int(round(k * hop_size * sr))
        chunk = clip.samples[start:start + width]
        if len(chunk) < width:
            # only reachable inside the half-sample tolerance
            chunk = np.concatenate([chunk, np.zeros(width - len(chunk))])
        out.append(Segment(chunk, sr, k * hop_size, clip.source_id, clip.channel_index, clip.label))
    return out
