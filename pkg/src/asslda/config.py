"""Run configuration.

Every tunable number of the pipeline lives in :class:`Config`. Configs are
read from and written to a plain ``key = value`` INI file with a single
``[asslda]`` section so they can be edited by hand and diffed.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

SECTION = "asslda"

# (C, gamma) per dataset profile.
SVM_PROFILES = {
    "litis": (4.0, 2.0),
    "dcase": (2.0, 4.0),
}


@dataclass(frozen=True)
class Config:
    # audio
    sample_rate: int = 22050
    seg_len: float = 2.0
    hop: float = 1.0
    # cochlear filterbank
    num_channels: int = 32
    low_freq: float = 20.0
    high_freq: float = 10000.0
    compression: float = 0.3
    env_rate: int = 400
    # modulation filterbank
    num_mod_bands: int = 20
    mod_low: float = 0.5
    mod_high: float = 200.0
    mod_q: float = 2.0
    # statistics (channel lags / 1-based band numbers)
    env_corr_offsets: tuple[int, ...] = (1, 2, 3, 5, 8, 11, 16, 21)
    mod_corr_channel_offsets: tuple[int, ...] = (1, 2)
    mod_corr_bands: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    # lda
    lda_dim: int = 0  # 0 -> number of classes - 1
    lda_reg: float = 1e-3
    # svm
    profile: str = "litis"
    svm_c: float = 0.0  # 0 -> from profile
    svm_gamma: float = 0.0  # 0 -> from profile
    svm_tol: float = 1e-3
    svm_cache_mb: float = 200.0
    # misc
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.profile not in SVM_PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; expected one of {sorted(SVM_PROFILES)}")
        if self.seg_len <= 0 or self.hop <= 0:
            raise ValueError("seg_len and hop must be positive")

    @property
    def C(self) -> float:
        return self.svm_c if self.svm_c > 0 else SVM_PROFILES[self.profile][0]

    @property
    def gamma(self) -> float:
        return self.svm_gamma if self.svm_gamma > 0 else SVM_PROFILES[self.profile][1]

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def frontend_hash(self) -> str:
        """Hash of every parameter that influences extracted features."""
        keys = (
            "sample_rate", "seg_len", "hop", "num_channels", "low_freq", "high_freq",
            "compression", "env_rate", "num_mod_bands", "mod_low", "mod_high", "mod_q",
            "env_corr_offsets", "mod_corr_channel_offsets", "mod_corr_bands",
        )
        d = self.to_dict()
        blob = json.dumps({k: d[k] for k in keys}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        cp = configparser.ConfigParser()
        cp[SECTION] = {k: _format(v) for k, v in self.to_dict().items()}
        with open(path, "w", encoding="utf-8") as fh:
            cp.write(fh)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        cp = configparser.ConfigParser()
        if not cp.read(path, encoding="utf-8"):
            raise FileNotFoundError(path)
        if SECTION not in cp:
            raise ValueError(f"{path}: missing [{SECTION}] section")
        return cls.from_mapping(cp[SECTION])

    @classmethod
    def from_mapping(cls, mapping) -> "Config":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        defaults = cls()
        kwargs = {}
        for key, raw in mapping.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse(raw, getattr(defaults, key))
        return cls(**kwargs)


def _format(v) -> str:
    if isinstance(v, (tuple, list)):
        return ", ".join(str(x) for x in v)
    return str(v)


def _parse(raw, default):
    if not isinstance(raw, str):
        return raw
    if isinstance(default, tuple):
        return tuple(int(x) for x in raw.replace(",", " ").split())
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


DEFAULT = Config()

__all__ = ["Config", "DEFAULT", "SVM_PROFILES"]
