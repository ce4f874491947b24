import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def periodic_sine(freq: int, sr: int, seconds: float, amplitude: float = 1.0) -> np.ndarray:
    """A sine whose second half-period is the exact negation of the first.

    Built by tiling, so every envelope window over the same phase holds the
    same squared samples and equal peaks compare exactly equal.
    """
    half_len = sr // (2 * freq)
    half = amplitude * np.sin(2 * np.pi * freq * np.arange(half_len) / sr)
    period = np.r_[half, -half]
    reps = int(round(seconds * freq))
    return np.tile(period, reps)


def decaying_bursts(amps, sr=8000, period_s=0.3, burst_s=0.15, lead_s=0.05) -> np.ndarray:
    """Exponentially decaying 200 Hz bursts, one per amplitude, after a short silence."""
    n = int(period_s * sr)
    off = int(lead_s * sr)
    t = np.arange(int(burst_s * sr)) / sr
    burst = np.exp(-t / 0.03) * np.sin(2 * np.pi * 200 * t)
    x = np.zeros(off + n * len(amps))
    for k, a in enumerate(amps):
        x[off + k * n: off + k * n + burst.size] = a * burst
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in acceptance.RESULTS:
        terminalreporter.write_line(f"{status}  {name}  {detail}".rstrip())
