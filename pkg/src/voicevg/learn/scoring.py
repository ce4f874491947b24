"""Per-patient aggregation of subsequence scores and late fusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import BadC, EmptyScores, MissingScore, UntrainedFusion
from .forest import RandomForestModel

DEFAULT_C = 2.0
THRESHOLD = 0.5
VOICE_FAMILIES = ("mfcc", "egemaps", "vg")
FUSION_STRATEGIES = ("average_merge", "forest")


@dataclass(frozen=True)
class PatientAggregate:
    subject_id: str
    n: int
    p_max: float
    p_mean: float
    c: float

    @property
    def weight_max(self) -> float:
        """Share of p_max in the blend, 1 / (1 + n/c)."""
        return 1.0 / (1.0 + self.n / self.c)

    @property
    def probability(self) -> float:
        r = self.n / self.c
        return (self.p_max + self.p_mean * r) / (1.0 + r)


def patient_aggregate(scores: Sequence[float], c: float = DEFAULT_C, subject_id: str = "") -> PatientAggregate:
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise EmptyScores(f"no scores for subject {subject_id!r}")
    if not c > 0 or not np.isfinite(c):
        raise BadC(f"scaling factor c must be positive, got {c}")
    if np.any((s < 0) | (s > 1)) or not np.all(np.isfinite(s)):
        raise ValueError("scores must lie in [0, 1]")
    return PatientAggregate(subject_id, int(s.size), float(s.max()), float(s.mean()), float(c))


def aggregate_patient(scores: Sequence[float], c: float = DEFAULT_C) -> float:
    """Blend the max and mean of n subsequence probabilities.

    ``(p_max + p_mean * n/c) / (1 + n/c)``: few subsequences lean on the
    strongest one, many lean on the average.
    """
    return patient_aggregate(scores, c).probability


def label_of(p: float) -> int:
    """Ties at exactly 0.5 are positive."""
    return int(p >= THRESHOLD)


def fuse_scores(
    voice: Mapping[str, float | None],
    text_p: float | None,
    strategy: str = "average_merge",
    fusion_model: RandomForestModel | None = None,
    families: Sequence[str] = VOICE_FAMILIES,
) -> tuple[float, int]:
    """Average the voice families, then merge with the text probability.

    ``average_merge`` takes the mean of (voice average, text); ``forest``
    feeds the pair to a trained fusion forest.  Returns (probability, label).
    """
    missing = [f for f in families if voice.get(f) is None]
    if missing:
        raise MissingScore(f"missing voice score(s): {', '.join(missing)}")
    if text_p is None:
        raise MissingScore("missing text score")
    vals = [float(voice[f]) for f in families] + [float(text_p)]
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValueError("scores must lie in [0, 1]")
    voice_avg = float(np.mean(vals[:-1]))
    if strategy == "average_merge":
        final = (voice_avg + float(text_p)) / 2.0
    elif strategy == "forest":
        if fusion_model is None:
            raise UntrainedFusion("forest fusion requested without a trained fusion model")
        final = float(fusion_model.predict_proba([[voice_avg, float(text_p)]])[0])
    else:
        raise ValueError(f"unknown fusion strategy {strategy!r}")
    return final, label_of(final)


def voice_average(voice: Mapping[str, float], families: Sequence[str] = VOICE_FAMILIES) -> float:
    return float(np.mean([voice[f] for f in families]))
