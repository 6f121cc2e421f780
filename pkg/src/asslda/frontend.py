"""Auditory front end: cochlear filterbank, compressed envelopes, modulation bands.

Both filterbanks are zero-phase magnitude responses on an rFFT grid, built
from half-cosine lobes in log frequency. Filtering is a single FFT of the
whole segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.signal


@dataclass(frozen=True)
class CochlearFilterbank:
    sample_rate: int
    fft_size: int
    center_freqs: np.ndarray
    freqs: np.ndarray
    responses: np.ndarray  # (num_channels, fft_size // 2 + 1)
    span: tuple[float, float]

    @property
    def num_channels(self) -> int:
        return len(self.center_freqs)

    def response_at(self, f) -> np.ndarray:
        """Evaluate the channel responses at arbitrary frequencies, shape (channels, len(f))."""
        return _half_cosine(np.atleast_1d(np.asarray(f, float)), self.center_freqs, self._width)

    @property
    def _width(self) -> float:
        return float(np.log(self.center_freqs[1] / self.center_freqs[0]))


@dataclass(frozen=True)
class ModulationFilterbank:
    env_rate: int
    fft_size: int
    center_freqs: np.ndarray
    freqs: np.ndarray
    responses: np.ndarray  # (num_bands, fft_size // 2 + 1)
    quality_factor: float
    gain: float

    @property
    def num_bands(self) -> int:
        return len(self.center_freqs)

    def response_at(self, f) -> np.ndarray:
        w = _q_to_log_width(self.quality_factor)
        return self.gain * _half_cosine(np.atleast_1d(np.asarray(f, float)), self.center_freqs, w)


@dataclass(frozen=True)
class EnvelopeSet:
    envelopes: np.ndarray  # (channels, T), compressed
    env_rate: int
    compression_exponent: float


@dataclass(frozen=True)
class ModulationSet:
    signals: np.ndarray  # (channels, bands, T)
    env_rate: int


def _half_cosine(f: np.ndarray, centers: np.ndarray, width: float) -> np.ndarray:
    """cos(pi/2 * u) for |u| < 1 where u = ln(f / fc) / width; zero elsewhere."""
    with np.errstate(divide="ignore"):
        lf = np.where(f > 0, np.log(np.where(f > 0, f, 1.0)), -np.inf)
    u = (lf[None, :] - np.log(centers)[:, None]) / width
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.cos(0.5 * np.pi * u[inside])
    return out


def _q_to_log_width(q: float) -> float:
    # half-power points of cos(pi/2 u) sit at u = +-1/2; bandwidth there is fc / q
    return 2.0 * float(np.arcsinh(1.0 / (2.0 * q)))


def design_cochlear_filterbank(sample_rate: int, fft_size: int, num_channels: int = 32,
                               low: float = 20.0, high: float = 10000.0) -> CochlearFilterbank:
    """Log-spaced half-cosine filterbank between ``low`` and ``high`` Hz.

    Lobe edges sit on the neighbouring centres, so the squared responses sum
    to exactly one between the first and last centre frequency.
    """
    if sample_rate < 2 * high:
        raise ValueError(f"sample_rate {sample_rate} Hz cannot represent the {high} Hz filterbank edge")
    if num_channels < 2:
        raise ValueError("need at least two channels")
    edges = np.geomspace(low, high, num_channels + 2)
    centers = edges[1:-1]
    freqs = np.fft.rfftfreq(fft_size, 1.0 / sample_rate)
    width = np.log(edges[1] / edges[0])
    responses = _half_cosine(freqs, centers, width)
    responses.setflags(write=False)
    return CochlearFilterbank(int(sample_rate), int(fft_size), centers, freqs, responses, (low, high))


def design_modulation_filterbank(env_rate: int, fft_size: int, num_bands: int = 20,
                                 low: float = 0.5, high: float = 200.0,
                                 q: float = 2.0) -> ModulationFilterbank:
    """Constant-Q half-cosine modulation filters with log-spaced centres.

    With Q = 2 the lobes overlap more than adjacent tiling would; the bank is
    rescaled so its mean squared sum across the span of centres is one.
    """
    centers = np.geomspace(low, high, num_bands)
    width = _q_to_log_width(q)
    probe = np.geomspace(centers[0], centers[-1], 4096)
    gain = 1.0 / np.sqrt(np.mean(np.sum(_half_cosine(probe, centers, width) ** 2, axis=0)))
    freqs = np.fft.rfftfreq(fft_size, 1.0 / env_rate)
    responses = gain * _half_cosine(freqs, centers, width)
    responses.setflags(write=False)
    return ModulationFilterbank(int(env_rate), int(fft_size), centers, freqs, responses, float(q), float(gain))


@lru_cache(maxsize=16)
def cochlear_filterbank(sample_rate: int, fft_size: int, num_channels: int = 32,
                        low: float = 20.0, high: float = 10000.0) -> CochlearFilterbank:
    return design_cochlear_filterbank(sample_rate, fft_size, num_channels, low, high)


@lru_cache(maxsize=16)
def modulation_filterbank(env_rate: int, fft_size: int, num_bands: int = 20,
                          low: float = 0.5, high: float = 200.0, q: float = 2.0) -> ModulationFilterbank:
    return design_modulation_filterbank(env_rate, fft_size, num_bands, low, high, q)


def apply_filterbank(x: np.ndarray, fb: CochlearFilterbank) -> np.ndarray:
    """Zero-phase subband decomposition, returns (channels, len(x))."""
    x = np.asarray(x, dtype=float)
    if len(x) != fb.fft_size:
        raise ValueError(f"signal length {len(x)} does not match filterbank fft_size {fb.fft_size}")
    spec = np.fft.rfft(x)
    return np.fft.irfft(spec[None, :] * fb.responses, n=fb.fft_size, axis=-1)


def hilbert_envelope(subbands: np.ndarray) -> np.ndarray:
    return np.abs(scipy.signal.hilbert(subbands, axis=-1))


def analytic_subbands(x: np.ndarray, fb: CochlearFilterbank, channels: slice = slice(None)) -> np.ndarray:
    """Analytic signal of every subband straight from the filtered spectrum.

    The real part equals :func:`apply_filterbank` output because the
    responses vanish at DC and Nyquist.
    """
    x = np.asarray(x, dtype=float)
    n = fb.fft_size
    if len(x) != n:
        raise ValueError(f"signal length {len(x)} does not match filterbank fft_size {n}")
    half = np.fft.rfft(x)[None, :] * fb.responses[channels]
    z = np.zeros((half.shape[0], n), dtype=complex)
    z[:, :half.shape[1]] = half
    z[:, 1:(n + 1) // 2] *= 2.0
    return np.fft.ifft(z, axis=-1)


def extract_envelopes(subbands: np.ndarray, sample_rate: int, env_rate: int = 400,
                      compression: float = 0.3) -> EnvelopeSet:
    """Hilbert magnitude, power-law compression, then anti-aliased decimation.

    Decimation truncates the spectrum below ``env_rate / 2`` (the Nyquist bin
    itself is dropped), keeping the whole chain circular like the filterbank.
    Ripple below zero is clamped.
    """
    return _compress_and_decimate(hilbert_envelope(subbands), sample_rate, env_rate, compression)


def _compress_and_decimate(magnitude, sample_rate, env_rate, compression) -> EnvelopeSet:
    env = magnitude ** compression
    n_in = magnitude.shape[-1]
    n_out = int(round(n_in * env_rate / sample_rate))
    spec = np.fft.rfft(env, axis=-1)
    keep = np.zeros(spec.shape[:-1] + (n_out // 2 + 1,), dtype=complex)
    k = min((n_out + 1) // 2, spec.shape[-1])
    keep[..., :k] = spec[..., :k]
    down = np.fft.irfft(keep, n=n_out, axis=-1) * (n_out / n_in)
    np.maximum(down, 0.0, out=down)
    return EnvelopeSet(down, int(env_rate), float(compression))


def apply_modulation_filterbank(env: EnvelopeSet | np.ndarray, mfb: ModulationFilterbank) -> ModulationSet:
    """Band-pass every envelope with every modulation filter, returns (channels, bands, T)."""
    e = env.envelopes if isinstance(env, EnvelopeSet) else np.asarray(env, float)
    if e.shape[-1] != mfb.fft_size:
        raise ValueError(f"envelope length {e.shape[-1]} does not match fft_size {mfb.fft_size}")
    e = e - e.mean(axis=-1, keepdims=True)
    spec = np.fft.rfft(e, axis=-1)
    out = np.fft.irfft(spec[:, None, :] * mfb.responses[None, :, :], n=mfb.fft_size, axis=-1)
    return ModulationSet(out, mfb.env_rate)


_BLOCK = 8


@dataclass(frozen=True)
class FrontendOutput:
    subbands: np.ndarray
    envelopes: EnvelopeSet
    modulations: ModulationSet


def run_frontend(x: np.ndarray, sample_rate: int, cfg=None) -> FrontendOutput:
    """Full front end for one segment at the frontend sample rate."""
    from asslda.config import DEFAULT
    cfg = cfg or DEFAULT
    fb = cochlear_filterbank(sample_rate, len(x), cfg.num_channels, cfg.low_freq, cfg.high_freq)
    sub = np.empty((fb.num_channels, len(x)))
    mag = np.empty_like(sub)
    # blocks of channels bound the complex working set on long segments
    for lo in range(0, fb.num_channels, _BLOCK):
        hi = min(lo + _BLOCK, fb.num_channels)
        analytic = analytic_subbands(x, fb, slice(lo, hi))
        sub[lo:hi] = analytic.real
        mag[lo:hi] = np.abs(analytic)
        del analytic
    env = _compress_and_decimate(mag, sample_rate, cfg.env_rate, cfg.compression)
    del mag
    mfb = modulation_filterbank(cfg.env_rate, env.envelopes.shape[-1], cfg.num_mod_bands,
                                cfg.mod_low, cfg.mod_high, cfg.mod_q)
    mods = apply_modulation_filterbank(env, mfb)
    return FrontendOutput(sub, env, mods)
