"""Seeded two-class synthetic corpus.

Negative subjects (label 0) speak in strongly amplitude-modulated harmonic
clips with little noise.  Positive subjects (label 1) produce flatter,
noise-dominated clips with weak modulation.  Class parameters overlap so the
task is not trivial.  Each subject also gets a synthetic 88-column eGeMAPS
table and a file of per-subsequence text probabilities, so every pipeline
stage has input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..audio_features import N_EGEMAPS
from ..signal_core import write_wav
from ..tables import write_csv

EGEMAPS_NAMES = tuple(f"egemaps_{i:02d}" for i in range(N_EGEMAPS))
N_INFORMATIVE_EGEMAPS = 12


@dataclass(frozen=True)
class SynthConfig:
    subjects_per_class: int = 60
    split: tuple[int, int, int] = (40, 10, 10)
    clips_per_subject: int = 3
    duration_s: float = 2.0
    sample_rate: int = 16000
    seed: int = 0

    def __post_init__(self):
        if sum(self.split) != self.subjects_per_class:
            raise ValueError(f"split {self.split} does not add up to {self.subjects_per_class}")
        if self.clips_per_subject < 1 or self.duration_s <= 0 or self.sample_rate <= 0:
            raise ValueError("invalid synth config")


def _pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spec.size, dtype=np.float64)
    f[0] = 1.0
    x = np.fft.irfft(spec / np.sqrt(f), n)
    return x / (np.std(x) + 1e-12)


def synth_clip(rng: np.random.Generator, label: int, duration_s: float, sr: int) -> np.ndarray:
    n = int(round(duration_s * sr))
    t = np.arange(n) / sr
    f0 = rng.uniform(95.0, 230.0)
    vibrato = 1.0 + 0.01 * np.sin(2 * np.pi * rng.uniform(4.0, 6.0) * t)
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / sr
    harmonics = sum(np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k for k in range(1, 7))
    harmonics /= np.max(np.abs(harmonics)) + 1e-12

    if label == 0:
        depth = rng.uniform(0.35, 0.95)
        rate = rng.uniform(2.0, 5.0)
        noise_level = rng.uniform(0.05, 0.7)
    else:
        depth = rng.uniform(0.0, 0.6)
        rate = rng.uniform(1.0, 4.0)
        noise_level = rng.uniform(0.3, 1.0)
    mod = 1.0 - depth * 0.5 * (1.0 + np.cos(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi)))
    noise = 0.5 * rng.standard_normal(n) + 0.5 * _pink_noise(rng, n)
    x = mod * harmonics + noise_level * noise / 3.0
    return 0.6 * x / (np.max(np.abs(x)) + 1e-12)


def synth_egemaps(rng: np.random.Generator, label: int, n_clips: int) -> np.ndarray:
    base = rng.normal(0.0, 1.0, N_EGEMAPS)
    base[:N_INFORMATIVE_EGEMAPS] += 0.3 if label else -0.3
    return base + rng.normal(0.0, 0.6, (n_clips, N_EGEMAPS))


def synth_text_scores(rng: np.random.Generator, label: int) -> np.ndarray:
    n = int(rng.integers(4, 13))
    a, b = (4.0, 2.5) if label else (2.5, 4.0)
    return rng.beta(a, b, n)


def generate_corpus(out_dir, config: SynthConfig = SynthConfig()) -> Path:
    """Write WAVs, eGeMAPS and text-score CSVs plus ``manifest.json``; return the manifest path."""
    out = Path(out_dir)
    for sub in ("wav", "egemaps", "text"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    splits = ["train"] * config.split[0] + ["val"] * config.split[1] + ["test"] * config.split[2]
    subjects = []
    for label in (0, 1):
        for k in range(config.subjects_per_class):
            sid = f"{'pos' if label else 'neg'}{k:03d}"
            rng = np.random.default_rng([config.seed, label, k])
            clip_paths = []
            for j in range(config.clips_per_subject):
                rel = f"wav/{sid}_c{j}.wav"
                write_wav(out / rel, synth_clip(rng, label, config.duration_s, config.sample_rate),
                          config.sample_rate)
                clip_paths.append(rel)
            ege = synth_egemaps(rng, label, config.clips_per_subject)
            write_csv(out / f"egemaps/{sid}.csv", ("name", *EGEMAPS_NAMES),
                      ([Path(p).stem, *row] for p, row in zip(clip_paths, ege)))
            text = synth_text_scores(rng, label)
            write_csv(out / f"text/{sid}.csv", ("subject_id", "subseq_id", "probability"),
                      ([sid, i, p] for i, p in enumerate(text)))
            subjects.append({
                "subject_id": sid,
                "label": label,
                "split": splits[k],
                "clips": clip_paths,
                "egemaps_csv": f"egemaps/{sid}.csv",
                "text_scores_csv": f"text/{sid}.csv",
            })
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"subjects": subjects}, indent=2) + "\n")
    return manifest
