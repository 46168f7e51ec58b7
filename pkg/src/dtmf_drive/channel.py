"""Audio-path impairments between the remote phone and the vehicle phone.

Models the degradations the decoder has to survive: gain error, white
noise at a configured SNR, a small time-base (frequency) deviation, and a
single interfering tone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from dtmf_drive.signal import SampleBuffer

FREQ_SCALE_MIN = 0.9
FREQ_SCALE_MAX = 1.1

_ACTIVE_EPS = 1e-9


@dataclass(frozen=True)
class Interferer:
    """A third tone riding on the channel; level in dB re full scale."""

    freq_hz: float
    level_db: float

    def __post_init__(self) -> None:
        if self.freq_hz <= 0:
            raise ValueError("interferer freq_hz must be positive")

    @property
    def amplitude(self) -> float:
        return 10.0 ** (self.level_db / 20.0)


@dataclass(frozen=True)
class ChannelConfig:
    """Impairment settings; the default config passes audio untouched.

    ``snr_db=None`` means a noiseless channel. ``freq_scale`` multiplies the
    time base, shifting both tones of a pair proportionally.
    """

    gain_db: float = 0.0
    snr_db: Optional[float] = None
    freq_scale: float = 1.0
    interferer: Optional[Interferer] = None

    def __post_init__(self) -> None:
        if not (FREQ_SCALE_MIN <= self.freq_scale <= FREQ_SCALE_MAX):
            raise ValueError(
                f"freq_scale must lie in [{FREQ_SCALE_MIN}, {FREQ_SCALE_MAX}]"
            )
        if self.snr_db is not None and not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite or None")

    @property
    def is_clean(self) -> bool:
        return (
            self.gain_db == 0.0
            and self.snr_db is None
            and self.freq_scale == 1.0
            and self.interferer is None
        )


def apply(buffer: SampleBuffer, cfg: ChannelConfig, seed: int = 0) -> SampleBuffer:
    """Pass a buffer through the channel; deterministic for a fixed seed.

    Output length equals input length (time-base scaling resamples back to
    the original rate). Noise power is calibrated against the signal power
    measured over tone-active samples, then the result is clipped to
    [-1, +1].
    """
    if cfg.is_clean:
        return SampleBuffer(buffer.rate_hz, buffer.samples)

    x = np.asarray(buffer.samples, dtype=np.float64)
    n = x.size

    if cfg.freq_scale != 1.0:
        # y(t) = x(s*t): evaluate the source at scaled positions, zero padded.
        positions = cfg.freq_scale * np.arange(n)
        x = np.interp(positions, np.arange(n), x, left=0.0, right=0.0)

    if cfg.gain_db != 0.0:
        x = x * 10.0 ** (cfg.gain_db / 20.0)

    signal_part = x
    if cfg.interferer is not None:
        t = np.arange(n) / buffer.rate_hz
        x = x + cfg.interferer.amplitude * np.sin(
            2.0 * np.pi * cfg.interferer.freq_hz * t
        )

    if cfg.snr_db is not None:
        active = np.abs(signal_part) > _ACTIVE_EPS
        if np.any(active):
            p_sig = float(np.mean(signal_part[active] ** 2))
            std = np.sqrt(p_sig * 10.0 ** (-cfg.snr_db / 10.0))
            rng = np.random.default_rng(seed)
            x = x + rng.normal(0.0, std, n)

    return SampleBuffer(buffer.rate_hz, np.clip(x, -1.0, 1.0))
