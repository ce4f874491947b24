"""Spectrogram, mel spectrogram, MFCC, clip pooling and eGeMAPS ingestion.

Power spectra are scaled by ``1/fft_size`` so that, with the interior bins
counted twice, a frame's bins sum to the energy of the windowed frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import signal_core as sc
from .errors import (
    BadBand,
    BadFftSize,
    ConfigError,
    DuplicateId,
    Empty,
    NonNumericCell,
    WrongColumnCount,
)

N_EGEMAPS = 88
LOG_FLOOR = 1e-10

DEFAULT_FRAME_MS = 25.0
DEFAULT_HOP_MS = 10.0
DEFAULT_N_MELS = 26
DEFAULT_N_MFCC = 13


@dataclass(frozen=True)
class SpectrogramMatrix:
    values: np.ndarray  # [n_frames, fft_size // 2 + 1]
    sample_rate: int
    fft_size: int
    frame_len: int
    hop_len: int

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass(frozen=True)
class MfccMatrix:
    values: np.ndarray  # [n_frames, n_coeffs]

    @property
    def n_coeffs(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class ClipFeatureVector:
    names: tuple[str, ...]
    values: np.ndarray
    provenance: str


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def default_fft_size(sample_rate: int, frame_ms: float = DEFAULT_FRAME_MS) -> int:
    """512 at 16 kHz / 25 ms; the next power of two above the frame otherwise."""
    return next_pow2(int(round(frame_ms * sample_rate / 1000.0)))


def spectrogram(
    clip: sc.AudioClip,
    fft_size: int | None = None,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
) -> SpectrogramMatrix:
    """Hamming-windowed power spectrogram, each frame zero-padded to ``fft_size``."""
    frames = sc.frame_signal(clip, frame_ms, hop_ms, "hamming")
    if fft_size is None:
        fft_size = next_pow2(frames.frame_len)
    if fft_size < 1 or fft_size & (fft_size - 1):
        raise BadFftSize(f"fft_size must be a power of two, got {fft_size}")
    if fft_size < frames.frame_len:
        raise BadFftSize(f"fft_size {fft_size} is shorter than the frame ({frames.frame_len})")
    spec = np.fft.rfft(frames.frames, n=fft_size, axis=1)
    power = (spec.real ** 2 + spec.imag ** 2) / fft_size
    return SpectrogramMatrix(power, clip.sample_rate, fft_size, frames.frame_len, frames.hop_len)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int,
                   f_min: float = 0.0, f_max: float | None = None) -> np.ndarray:
    """Triangular HTK-mel filters, each row scaled to sum to one.

    A filter too narrow to cover any bin puts all its weight on the bin
    nearest its center.
    """
    nyquist = sample_rate / 2.0
    if f_max is None:
        f_max = nyquist
    if not 0 <= f_min < f_max <= nyquist:
        raise BadBand(f"need 0 <= f_min < f_max <= {nyquist}, got {f_min}, {f_max}")
    if n_mels < 1:
        raise ConfigError("n_mels must be >= 1")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    fb = np.clip(np.minimum(rising, falling), 0.0, None)
    sums = fb.sum(axis=1)
    for m in np.flatnonzero(sums == 0):
        fb[m, int(np.argmin(np.abs(freqs - edges[m + 1])))] = 1.0
        sums[m] = 1.0
    return fb / sums[:, None]


def mel_spectrogram(spec: SpectrogramMatrix, n_mels: int = DEFAULT_N_MELS,
                    f_min: float = 0.0, f_max: float | None = None) -> np.ndarray:
    fb = mel_filterbank(n_mels, spec.fft_size, spec.sample_rate, f_min, f_max)
    return spec.values @ fb.T


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row k is the k-th cosine."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    basis[0] *= math.sqrt(1.0 / n)
    basis[1:] *= math.sqrt(2.0 / n)
    return basis


def log_mel(mel: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(mel, LOG_FLOOR))


def mfcc(mel: np.ndarray, n_coeffs: int = DEFAULT_N_MFCC) -> MfccMatrix:
    mel = np.atleast_2d(np.asarray(mel, dtype=np.float64))
    n_mels = mel.shape[1]
    if not 1 <= n_coeffs <= n_mels:
        raise ConfigError(f"n_coeffs must lie in [1, {n_mels}], got {n_coeffs}")
    return MfccMatrix(log_mel(mel) @ dct_matrix(n_mels)[:n_coeffs].T)


def pool_clip(frames, prefix: str = "f", provenance: str = "") -> ClipFeatureVector:
    """Per-column mean followed by per-column population std."""
    values = frames.values if isinstance(frames, (MfccMatrix, SpectrogramMatrix)) else frames
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[0] == 0:
        raise Empty("cannot pool zero frames")
    d = values.shape[1]
    names = tuple(f"{prefix}_mean_{i}" for i in range(d)) + tuple(f"{prefix}_std_{i}" for i in range(d))
    return ClipFeatureVector(names, np.concatenate([values.mean(axis=0), values.std(axis=0)]), provenance)


def lowlevel_features(
    clip: sc.AudioClip,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    fft_size: int | None = None,
    n_mels: int = DEFAULT_N_MELS,
    n_mfcc: int = DEFAULT_N_MFCC,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> ClipFeatureVector:
    """Pooled MFCC, log-mel and log-power spectrogram, concatenated.

    This is the clip vector of the "mfcc" (low-level) family.
    """
    spec = spectrogram(clip, fft_size, frame_ms, hop_ms)
    mel = mel_spectrogram(spec, n_mels, f_min, f_max)
    parts = [
        pool_clip(mfcc(mel, n_mfcc), "mfcc", "mfcc"),
        pool_clip(log_mel(mel), "mel", "mel"),
        pool_clip(np.log(np.maximum(spec.values, LOG_FLOOR)), "spec", "spectro"),
    ]
    names = tuple(n for p in parts for n in p.names)
    return ClipFeatureVector(names, np.concatenate([p.values for p in parts]), "mfcc")


# --------------------------------------------------------------------------
# eGeMAPS
# --------------------------------------------------------------------------

def ingest_egemaps_csv(path) -> dict[str, np.ndarray]:
    """Read an externally computed eGeMAPSv02 table keyed by its first column.

    The delimiter (``,`` or ``;``) is taken from whichever occurs more often
    in the header line.  Exactly 88 value columns must follow the id column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        header_line = fh.readline()
        delim = ";" if header_line.count(";") > header_line.count(",") else ","
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delim)
        header = next(reader, None)
        if header is None:
            raise WrongColumnCount(f"{path}: empty file")
        if len(header) - 1 != N_EGEMAPS:
            raise WrongColumnCount(f"{path}: expected {N_EGEMAPS} feature columns, found {len(header) - 1}")
        out: dict[str, np.ndarray] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) - 1 != N_EGEMAPS:
                raise WrongColumnCount(f"{path}:{lineno}: expected {N_EGEMAPS} feature columns, found {len(row) - 1}")
            clip_id = row[0].strip().strip("'\"")
            try:
                values = np.array([float(c) for c in row[1:]])
            except ValueError as exc:
                raise NonNumericCell(f"{path}:{lineno}: {exc}") from exc
            if not np.all(np.isfinite(values)):
                raise NonNumericCell(f"{path}:{lineno}: non-finite value")
            if clip_id in out:
                raise DuplicateId(f"{path}:{lineno}: duplicate clip id {clip_id!r}")
            out[clip_id] = values
    return out


def egemaps_header(path) -> list[str]:
    """Feature column names of an eGeMAPS table (id column excluded)."""
    with Path(path).open(newline="") as fh:
        line = fh.readline()
    delim = ";" if line.count(";") > line.count(",") else ","
    return next(csv.reader([line], delimiter=delim))[1:]
