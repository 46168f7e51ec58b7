"""Shared test oracles and pipeline helpers.

The oracles here are deliberately independent of the implementation paths
they check: brute-force DFT projections instead of the Goertzel recurrence,
and the closed-form constant-curvature arc instead of the Euler integrator.
"""

import numpy as np
import pytest

from dtmf_drive.decoder import DetectorConfig, stream_detect
from dtmf_drive.signal import SampleBuffer
from dtmf_drive.steering import LATCHED, SteeringConfig, run as steering_run


def dft_projection_energy(x: np.ndarray, f_hz: float, rate_hz: int) -> float:
    """Brute-force single-frequency projection energy, 2|X(f)|^2 / N^2."""
    n = len(x)
    phasor = np.exp(-2j * np.pi * f_hz * np.arange(n) / rate_hz)
    return 2.0 * abs(np.dot(x, phasor)) ** 2 / n**2


def spectrum_peak_freqs(x: np.ndarray, rate_hz: int, count: int = 2) -> list[float]:
    """Frequencies of the `count` largest magnitude bins of a full DFT scan."""
    mags = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), 1.0 / rate_hz)
    order = np.argsort(mags)[::-1]
    return sorted(freqs[order[:count]].tolist())


def arc_step(x, y, theta, v, omega, dt):
    """Exact constant-curvature pose update (test oracle for Euler)."""
    if omega == 0.0:
        return x + v * np.cos(theta) * dt, y + v * np.sin(theta) * dt, theta
    theta2 = theta + omega * dt
    x2 = x + v / omega * (np.sin(theta2) - np.sin(theta))
    y2 = y - v / omega * (np.cos(theta2) - np.cos(theta))
    return x2, y2, theta2


def padded(samples: np.ndarray, rate_hz: int, lead_ms: float = 100.0, tail_ms: float = 100.0) -> SampleBuffer:
    lead = np.zeros(round(rate_hz * lead_ms / 1000.0))
    tail = np.zeros(round(rate_hz * tail_ms / 1000.0))
    return SampleBuffer(rate_hz, np.concatenate([lead, samples, tail]))


def latched_codes(buffer: SampleBuffer, profile: str = "standard",
                  steering_cfg: SteeringConfig = SteeringConfig()) -> list[int]:
    """Full decode pipeline: detector frames -> guard latch -> code list."""
    cfg = DetectorConfig.for_rate(buffer.rate_hz, profile)
    frames = stream_detect(buffer, cfg)
    events = steering_run(frames, steering_cfg)
    return [e.code for e in events if e.kind == LATCHED]


@pytest.fixture
def rng():
    return np.random.default_rng(0xD7)
