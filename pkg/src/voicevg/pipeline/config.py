from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .. import audio_features as af
from .. import signal_core as sc
from ..errors import ConfigError
from ..learn import DEFAULT_C, FUSION_STRATEGIES, ForestConfig


@dataclass(frozen=True)
class RunConfig:
    # envelope / peaks
    window_ms: float = sc.DEFAULT_WINDOW_MS
    min_distance_ms: float = sc.DEFAULT_MIN_DISTANCE_MS
    min_prominence: float = sc.DEFAULT_MIN_PROMINENCE
    vg_input: str = "peaks"
    vg_builder: str = "fast"
    # spectral
    frame_ms: float = af.DEFAULT_FRAME_MS
    hop_ms: float = af.DEFAULT_HOP_MS
    fft_size: int | None = None
    n_mels: int = af.DEFAULT_N_MELS
    n_mfcc: int = af.DEFAULT_N_MFCC
    f_min: float = 0.0
    f_max: float | None = None
    # forest
    n_trees: int = 200
    max_depth: int = 8
    min_leaf: int = 2
    features_per_split: int | None = None
    zscore: bool = False
    # scoring
    c: float = DEFAULT_C
    fusion: str = "average_merge"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        problems = []
        if self.window_ms <= 0:
            problems.append("window_ms must be > 0")
        if self.min_distance_ms < 0 or self.min_prominence < 0:
            problems.append("min_distance_ms and min_prominence must be >= 0")
        if self.vg_input not in ("peaks", "raw"):
            problems.append("vg_input must be 'peaks' or 'raw'")
        if self.vg_builder not in ("fast", "naive"):
            problems.append("vg_builder must be 'fast' or 'naive'")
        if not self.frame_ms >= self.hop_ms > 0:
            problems.append("need frame_ms >= hop_ms > 0")
        if self.fft_size is not None and (self.fft_size < 1 or self.fft_size & (self.fft_size - 1)):
            problems.append("fft_size must be a power of two")
        if not 1 <= self.n_mfcc <= self.n_mels:
            problems.append("need 1 <= n_mfcc <= n_mels")
        if self.f_min < 0 or (self.f_max is not None and self.f_max <= self.f_min):
            problems.append("need 0 <= f_min < f_max")
        if self.n_trees < 1 or self.max_depth < 0 or self.min_leaf < 1:
            problems.append("n_trees >= 1, max_depth >= 0, min_leaf >= 1 required")
        if self.features_per_split is not None and self.features_per_split < 1:
            problems.append("features_per_split must be >= 1")
        if not self.c > 0:
            problems.append("c must be > 0")
        if self.fusion not in FUSION_STRATEGIES:
            problems.append(f"fusion must be one of {FUSION_STRATEGIES}")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))

    def forest(self, **overrides) -> ForestConfig:
        params = dict(n_trees=self.n_trees, max_depth=self.max_depth, min_leaf=self.min_leaf,
                      features_per_split=self.features_per_split, seed=self.seed)
        params.update(overrides)
        return ForestConfig(**params)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_namespace(cls, ns) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in names and v is not None})
