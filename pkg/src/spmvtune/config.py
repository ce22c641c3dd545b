"""Advisor configuration: machine parameters, timing policy, thresholds."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .features import CacheConfig, resolve_subset
from .profiling import ThresholdConfig


@dataclass(frozen=True)
class AdvisorConfig:
    llc_bytes: int = 16 * 1024 * 1024
    cacheline_bytes: int = 64
    workers: int = 4
    reps: int = 20
    warmup: int = 5
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    feature_subset: str = "all"

    def __post_init__(self):
        if min(self.llc_bytes, self.cacheline_bytes, self.workers, self.reps) < 1:
            raise ValueError("llc_bytes, cacheline_bytes, workers and reps must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        resolve_subset(self.feature_subset)  # raises on unknown preset/features

    @property
    def prefetch_distance(self) -> int:
        return max(1, self.cacheline_bytes // 8)

    def cache_config(self) -> CacheConfig:
        return CacheConfig(llc_bytes=self.llc_bytes,
                           cacheline_bytes=self.cacheline_bytes)

    def subset_names(self) -> tuple[str, ...]:
        return resolve_subset(self.feature_subset)

    def replace(self, **changes) -> "AdvisorConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "llc_bytes": self.llc_bytes,
            "cacheline_bytes": self.cacheline_bytes,
            "workers": self.workers,
            "reps": self.reps,
            "warmup": self.warmup,
            "thresholds": {"theta_cml": self.thresholds.theta_cml,
                           "theta_mb": self.thresholds.theta_mb,
                           "theta_imb": self.thresholds.theta_imb},
            "feature_subset": self.feature_subset,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AdvisorConfig":
        doc = dict(doc)
        thr = doc.pop("thresholds", None)
        if thr is not None:
            doc["thresholds"] = ThresholdConfig(**thr)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "AdvisorConfig":
        doc = json.loads(Path(path).read_text(encoding="ascii"))
        if not isinstance(doc, dict):
            raise ValueError("config file must contain a JSON object")
        return cls.from_dict(doc)
