"""Auditory summary statistics and the assembled ASS-vector.

Group order in the vector::

    subband_variance   C
    env_mean           C
    env_variance       C      (squared coefficient of variation)
    env_skew           C
    modulation_power   C * B  (channel major)
    env_correlation    sum over lags of (C - lag)
    modulation_correlation

All moments are population (1/N) moments. Any statistic that would divide
by a zero variance is defined as 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from asslda.config import DEFAULT, Config
from asslda.frontend import EnvelopeSet, FrontendOutput, ModulationSet, run_frontend

LAYOUT_VERSION = 1

GROUP_NAMES = (
    "subband_variance", "env_mean", "env_variance", "env_skew",
    "modulation_power", "env_correlation", "modulation_correlation",
)

# variance below this fraction of the mean square counts as zero
_DEGENERATE = 1e-20


@dataclass(frozen=True)
class FeatureLayout:
    num_channels: int
    num_bands: int
    env_corr_offsets: tuple[int, ...]
    mod_corr_channel_offsets: tuple[int, ...]
    mod_corr_band_indices: tuple[int, ...]  # 1-based
    frontend_hash: str = ""
    groups: tuple[tuple[str, int, int], ...] = field(init=False)

    def __post_init__(self):
        nc, nb = self.num_channels, self.num_bands
        if any(d <= 0 or d >= nc for d in self.env_corr_offsets + self.mod_corr_channel_offsets):
            raise ValueError("channel offsets must lie in [1, num_channels)")
        if any(b < 1 or b > nb for b in self.mod_corr_band_indices):
            raise ValueError("modulation band indices are 1-based and must lie in [1, num_bands]")
        sizes = [nc, nc, nc, nc, nc * nb,
                 sum(nc - d for d in self.env_corr_offsets),
                 len(self.mod_corr_band_indices) * sum(nc - d for d in self.mod_corr_channel_offsets)]
        groups, start = [], 0
        for name, size in zip(GROUP_NAMES, sizes):
            groups.append((name, start, start + size))
            start += size
        object.__setattr__(self, "groups", tuple(groups))

    @classmethod
    def from_config(cls, cfg: Config = DEFAULT) -> "FeatureLayout":
        return cls(cfg.num_channels, cfg.num_mod_bands, tuple(cfg.env_corr_offsets),
                   tuple(cfg.mod_corr_channel_offsets), tuple(cfg.mod_corr_bands),
                   cfg.frontend_hash())

    @property
    def total_dim(self) -> int:
        return self.groups[-1][2]

    def slice(self, name: str) -> slice:
        for g, a, b in self.groups:
            if g == name:
                return slice(a, b)
        raise KeyError(name)

    def sizes(self) -> dict[str, int]:
        return {g: b - a for g, a, b in self.groups}

    def to_dict(self) -> dict:
        return {
            "version": LAYOUT_VERSION,
            "num_channels": self.num_channels,
            "num_bands": self.num_bands,
            "env_corr_offsets": list(self.env_corr_offsets),
            "mod_corr_channel_offsets": list(self.mod_corr_channel_offsets),
            "mod_corr_band_indices": list(self.mod_corr_band_indices),
            "frontend_hash": self.frontend_hash,
            "groups": [list(g) for g in self.groups],
        }

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class AssVector:
    values: np.ndarray
    layout: FeatureLayout
    source_id: str = ""
    channel_index: int = 0
    start_time: float = 0.0
    label: str | None = None

    def group(self, name: str) -> np.ndarray:
        return self.values[self.layout.slice(name)]


def _degenerate(var: np.ndarray, meansq: np.ndarray) -> np.ndarray:
    return var <= _DEGENERATE * meansq


def marginal_moments(subbands: np.ndarray, env: EnvelopeSet | np.ndarray) -> np.ndarray:
    """Subband variance, envelope mean, envelope CV^2 and envelope skew, concatenated."""
    e = env.envelopes if isinstance(env, EnvelopeSet) else np.asarray(env, float)
    sub = np.asarray(subbands, float)
    sub_var = sub.var(axis=-1)

    m = e.mean(axis=-1)
    d = e - m[:, None]
    var = np.mean(d ** 2, axis=-1)
    m3 = np.mean(d ** 3, axis=-1)
    bad = _degenerate(var, np.mean(e ** 2, axis=-1))
    safe_var = np.where(bad, 1.0, var)
    cv2 = np.where(bad | (m == 0), 0.0, var / np.where(m == 0, 1.0, m) ** 2)
    skew = np.where(bad, 0.0, m3 / safe_var ** 1.5)
    return np.concatenate([sub_var, m, cv2, skew])


def modulation_power(mods: ModulationSet | np.ndarray, env: EnvelopeSet | np.ndarray) -> np.ndarray:
    """Variance of each modulation band divided by the variance of its envelope."""
    s = mods.signals if isinstance(mods, ModulationSet) else np.asarray(mods, float)
    e = env.envelopes if isinstance(env, EnvelopeSet) else np.asarray(env, float)
    env_var = e.var(axis=-1)
    bad = _degenerate(env_var, np.mean(e ** 2, axis=-1))
    power = s.var(axis=-1) / np.where(bad, 1.0, env_var)[:, None]
    power[bad] = 0.0
    return power.reshape(-1)


def _standardize(x: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance rows; degenerate rows become all zeros."""
    d = x - x.mean(axis=-1, keepdims=True)
    var = np.mean(d ** 2, axis=-1, keepdims=True)
    bad = _degenerate(var, np.mean(x ** 2, axis=-1, keepdims=True))
    return np.where(bad, 0.0, d / np.sqrt(np.where(bad, 1.0, var)))


def envelope_correlations(env: EnvelopeSet | np.ndarray, offsets=DEFAULT.env_corr_offsets) -> np.ndarray:
    """Pearson correlations between envelope pairs ``(i, i + lag)``.

    Ordered by lag ascending, then channel ascending.
    """
    e = env.envelopes if isinstance(env, EnvelopeSet) else np.asarray(env, float)
    z = _standardize(e)
    out = [np.mean(z[:-d] * z[d:], axis=-1) for d in sorted(offsets)]
    return np.clip(np.concatenate(out), -1.0, 1.0)


def modulation_correlations(mods: ModulationSet | np.ndarray,
                            channel_offsets=DEFAULT.mod_corr_channel_offsets,
                            band_indices=DEFAULT.mod_corr_bands) -> np.ndarray:
    """Correlations between the same modulation band of nearby cochlear channels.

    ``band_indices`` are 1-based. Ordered by band, then offset, then channel.
    """
    s = mods.signals if isinstance(mods, ModulationSet) else np.asarray(mods, float)
    out = []
    for b in sorted(band_indices):
        z = _standardize(s[:, b - 1, :])
        for d in sorted(channel_offsets):
            out.append(np.mean(z[:-d] * z[d:], axis=-1))
    return np.clip(np.concatenate(out), -1.0, 1.0)


def assemble_ass_vector(groups: dict[str, np.ndarray] | list[np.ndarray], layout: FeatureLayout,
                        **provenance) -> AssVector:
    """Concatenate statistic groups in layout order, checking every size."""
    if isinstance(groups, dict):
        groups = [groups[name] for name in GROUP_NAMES]
    if len(groups) != len(layout.groups):
        raise ValueError(f"expected {len(layout.groups)} groups, got {len(groups)}")
    parts = []
    for (name, a, b), g in zip(layout.groups, groups):
        g = np.asarray(g, float).reshape(-1)
        if g.size != b - a:
            raise ValueError(f"group {name!r} has {g.size} values, layout expects {b - a}")
        parts.append(g)
    return AssVector(np.concatenate(parts), layout, **provenance)


def statistic_groups(fe: FrontendOutput, layout: FeatureLayout) -> dict[str, np.ndarray]:
    moments = marginal_moments(fe.subbands, fe.envelopes)
    nc = layout.num_channels
    return {
        "subband_variance": moments[:nc],
        "env_mean": moments[nc:2 * nc],
        "env_variance": moments[2 * nc:3 * nc],
        "env_skew": moments[3 * nc:],
        "modulation_power": modulation_power(fe.modulations, fe.envelopes),
        "env_correlation": envelope_correlations(fe.envelopes, layout.env_corr_offsets),
        "modulation_correlation": modulation_correlations(
            fe.modulations, layout.mod_corr_channel_offsets, layout.mod_corr_band_indices),
    }


def compute_ass_vector(x: np.ndarray, sample_rate: int, cfg: Config = DEFAULT,
                       layout: FeatureLayout | None = None, **provenance) -> AssVector:
    """Front end plus statistics for one segment already at ``cfg.sample_rate``."""
    layout = layout or FeatureLayout.from_config(cfg)
    fe = run_frontend(x, sample_rate, cfg)
    return assemble_ass_vector(statistic_groups(fe, layout), layout, **provenance)
