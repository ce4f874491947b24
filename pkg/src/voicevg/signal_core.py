"""Audio loading, RMS envelope, peak picking and framing.

Everything here is a pure function of its inputs.  Arrays held by the value
types are marked read-only so instances can be shared across threads.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from numba import njit

from .errors import (
    ClipTooShort,
    ConfigError,
    MalformedWav,
    NonIncreasingTime,
    TooShort,
    UnsupportedEncoding,
    WindowTooLong,
)

DEFAULT_WINDOW_MS = 20.0
DEFAULT_MIN_DISTANCE_MS = 10.0
DEFAULT_MIN_PROMINENCE = 0.01

WindowKind = Literal["hamming", "hann", "rect"]


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = _frozen(np.ravel(self.samples))
        if samples.size < 2:
            raise TooShort(f"clip {self.source_id!r} has {samples.size} samples, need >= 2")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"clip {self.source_id!r} contains non-finite samples")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def as_series(self) -> "TimeSeries":
        """The raw samples as a (t, y) series with t in seconds."""
        t = np.arange(self.samples.size, dtype=np.float64) / self.sample_rate
        return TimeSeries(t, self.samples)


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = _frozen(np.ravel(self.t))
        y = _frozen(np.ravel(self.y))
        if t.shape != y.shape:
            raise ValueError(f"t and y differ in length ({t.size} vs {y.size})")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("time series contains non-finite values")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise NonIncreasingTime("timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return int(self.t.size)

    @classmethod
    def from_values(cls, y, dt: float = 1.0) -> "TimeSeries":
        y = np.asarray(y, dtype=np.float64)
        return cls(np.arange(y.size, dtype=np.float64) * dt, y)


@dataclass(frozen=True)
class PeakSequence:
    """Envelope maxima kept by :func:`detect_peaks`.

    ``indices`` point into the series the peaks were detected on.
    """

    series: TimeSeries
    indices: np.ndarray
    min_distance_ms: float
    min_prominence: float
    window_ms: float | None = None
    prominences: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "indices", _frozen(self.indices, dtype=np.int64))
        if self.prominences is None:
            object.__setattr__(self, "prominences", _frozen(np.zeros(self.indices.size)))
        else:
            object.__setattr__(self, "prominences", _frozen(self.prominences))

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def t(self) -> np.ndarray:
        return self.series.t[self.indices]

    @property
    def y(self) -> np.ndarray:
        return self.series.y[self.indices]

    def as_series(self) -> TimeSeries:
        return TimeSeries(self.t, self.y)


@dataclass(frozen=True)
class FrameMatrix:
    frames: np.ndarray
    frame_len: int
    hop_len: int
    sample_rate: int
    window_kind: str

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_ms(self) -> float:
        return 1000.0 * self.frame_len / self.sample_rate

    @property
    def hop_ms(self) -> float:
        return 1000.0 * self.hop_len / self.sample_rate


# --------------------------------------------------------------------------
# WAV I/O
# --------------------------------------------------------------------------

def load_wav(path) -> AudioClip:
    """Read a 16-bit PCM WAV file into a mono clip scaled to [-1, 1].

    Channels are averaged.  The clip's ``source_id`` is the file stem.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        if "unknown format" in str(exc):
            raise UnsupportedEncoding(f"{path}: {exc}") from exc
        raise MalformedWav(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise MalformedWav(f"{path}: truncated header") from exc

    if width != 2:
        raise UnsupportedEncoding(f"{path}: {8 * width}-bit samples, only PCM 16-bit is supported")
    if n_channels < 1 or rate <= 0:
        raise MalformedWav(f"{path}: bad header (channels={n_channels}, rate={rate})")
    expected = n_frames * n_channels * 2
    if len(raw) != expected:
        raise MalformedWav(f"{path}: data chunk truncated ({len(raw)} of {expected} bytes)")

    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    pcm = pcm.reshape(-1, n_channels).mean(axis=1)
    return AudioClip(pcm, rate, path.stem)


def write_wav(path, samples, sample_rate: int) -> None:
    """Write mono samples in [-1, 1] as 16-bit PCM (values are clipped)."""
    x = np.asarray(samples, dtype=np.float64)
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())


# --------------------------------------------------------------------------
# Envelope
# --------------------------------------------------------------------------

def _ms_to_samples(ms: float, sample_rate: int) -> int:
    return int(round(ms * sample_rate / 1000.0))


def compute_envelope(clip: AudioClip, window_ms: float = DEFAULT_WINDOW_MS) -> TimeSeries:
    """Moving-RMS envelope with a hop of half the window.

    Window energies are summed with :func:`math.fsum`, so windows holding the
    same squared samples yield bit-identical envelope values regardless of
    their position in the clip.  Equal-height peaks therefore stay equal.
    """
    if window_ms <= 0:
        raise ConfigError(f"window_ms must be positive, got {window_ms}")
    win = _ms_to_samples(window_ms, clip.sample_rate)
    if win < 1:
        raise ConfigError(f"window of {window_ms} ms is shorter than one sample")
    n = clip.samples.size
    if win > n:
        raise WindowTooLong(f"window of {win} samples exceeds clip length {n}")
    hop = max(1, win // 2)

    sq = clip.samples * clip.samples
    starts = np.arange(0, n - win + 1, hop)
    windows = np.lib.stride_tricks.sliding_window_view(sq, win)[starts]
    energy = np.fromiter((math.fsum(w) for w in windows), dtype=np.float64, count=starts.size)
    y = np.sqrt(energy / win)
    t = (starts + (win - 1) / 2.0) / clip.sample_rate
    return TimeSeries(t, y)


# --------------------------------------------------------------------------
# Peaks
# --------------------------------------------------------------------------

@njit(cache=True)
def _prominences(y, peaks):
    out = np.empty(peaks.size)
    n = y.size
    for k in range(peaks.size):
        i = peaks[k]
        h = y[i]
        left_min = h
        j = i - 1
        while j >= 0 and y[j] <= h:
            if y[j] < left_min:
                left_min = y[j]
            j -= 1
        right_min = h
        j = i + 1
        while j < n and y[j] <= h:
            if y[j] < right_min:
                right_min = y[j]
            j += 1
        out[k] = h - max(left_min, right_min)
    return out


def peak_prominences(y: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    """Topographic prominence of each peak index.

    The reference level on each side is the lowest sample between the peak
    and the nearest strictly higher sample (or the series border); the
    prominence is the height above the higher of the two levels.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    peaks = np.ascontiguousarray(peaks, dtype=np.int64)
    if peaks.size == 0:
        return np.zeros(0)
    return _prominences(y, peaks)


def _enforce_distance(t: np.ndarray, y: np.ndarray, peaks: np.ndarray, min_distance_s: float) -> np.ndarray:
    # Highest first; equal heights resolved in favour of the earlier peak.
    order = np.lexsort((peaks, -y[peaks]))
    pt = t[peaks]
    removed = np.zeros(peaks.size, dtype=bool)
    for k in order:
        if removed[k]:
            continue
        lo = np.searchsorted(pt, pt[k] - min_distance_s, side="right")
        hi = np.searchsorted(pt, pt[k] + min_distance_s, side="left")
        removed[lo:hi] = True
        removed[k] = False
    return peaks[~removed]


def detect_peaks(
    series: TimeSeries,
    min_distance_ms: float = DEFAULT_MIN_DISTANCE_MS,
    min_prominence: float = DEFAULT_MIN_PROMINENCE,
    window_ms: float | None = None,
) -> PeakSequence:
    """Strict local maxima, thinned by distance, then filtered by prominence.

    Returns an empty :class:`PeakSequence` when nothing qualifies.
    ``window_ms`` is only recorded, for provenance of envelope peaks.
    """
    if len(series) < 3:
        raise TooShort(f"peak detection needs >= 3 points, got {len(series)}")
    if min_distance_ms < 0 or min_prominence < 0:
        raise ConfigError("min_distance_ms and min_prominence must be >= 0")
    y, t = series.y, series.t

    peaks = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) + 1
    if peaks.size and min_distance_ms > 0:
        peaks = _enforce_distance(t, y, peaks, min_distance_ms / 1000.0)
    prom = peak_prominences(y, peaks)
    keep = prom >= min_prominence
    return PeakSequence(
        series=series,
        indices=peaks[keep],
        min_distance_ms=min_distance_ms,
        min_prominence=min_prominence,
        window_ms=window_ms,
        prominences=prom[keep],
    )


# --------------------------------------------------------------------------
# Framing
# --------------------------------------------------------------------------

def make_window(kind: str, length: int) -> np.ndarray:
    if kind == "hamming":
        return np.hamming(length)
    if kind == "hann":
        return np.hanning(length)
    if kind == "rect":
        return np.ones(length)
    raise ConfigError(f"unknown window kind {kind!r}")


def frame_signal(
    clip: AudioClip,
    frame_ms: float = 25.0,
    hop_ms: float = 10.0,
    window_kind: WindowKind = "hamming",
) -> FrameMatrix:
    """Cut the clip into windowed frames; a trailing partial frame is dropped."""
    if not frame_ms >= hop_ms > 0:
        raise ConfigError(f"need frame_ms >= hop_ms > 0, got {frame_ms}, {hop_ms}")
    frame_len = _ms_to_samples(frame_ms, clip.sample_rate)
    hop_len = _ms_to_samples(hop_ms, clip.sample_rate)
    if hop_len < 1:
        raise ConfigError(f"hop of {hop_ms} ms is shorter than one sample")
    n = clip.samples.size
    if n < frame_len:
        raise ClipTooShort(f"clip of {n} samples is shorter than one frame ({frame_len})")
    window = make_window(window_kind, frame_len)
    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_len)[::hop_len] * window
    frames.setflags(write=False)
    return FrameMatrix(frames, frame_len, hop_len, clip.sample_rate, window_kind)
