"""Dual-tone keypad signaling: tone table, synthesis, key scripts, WAV I/O.

Audio is mono float64 in [-1.0, +1.0] at an explicit sample rate. Synthesis
is fully deterministic: each tone starts with zero phase at its press
instant, so repeated runs are sample-identical.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

LOW_GROUP_HZ = (697.0, 770.0, 852.0, 941.0)
HIGH_GROUP_HZ = (1209.0, 1336.0, 1477.0, 1633.0)

_KEYPAD_ROWS = ("123A", "456B", "789C", "*0#D")

#: Keypad symbols in row-major order, 16 total.
KEYS: tuple[str, ...] = tuple(ch for row in _KEYPAD_ROWS for ch in row)

#: Key symbol -> (low group Hz, high group Hz).
KEY_TONES: dict[str, tuple[float, float]] = {
    ch: (LOW_GROUP_HZ[r], HIGH_GROUP_HZ[c])
    for r, row in enumerate(_KEYPAD_ROWS)
    for c, ch in enumerate(row)
}

#: (low index 0-3, high index 0-3) -> key symbol.
KEY_FOR_PAIR: dict[tuple[int, int], str] = {
    (r, c): ch for r, row in enumerate(_KEYPAD_ROWS) for c, ch in enumerate(row)
}

DEFAULT_RATE_HZ = 8000
DEFAULT_AMPLITUDE = 0.4
MIN_RATE_HZ = 4000
ACCEPTED_WAV_RATES = (8000, 16000, 44100)

_PCM_FULL_SCALE = 32767.0


class WavFormatError(ValueError):
    """Base error for WAV files this package cannot use."""


class MalformedWavError(WavFormatError):
    """The file is not a structurally valid RIFF/WAVE stream."""


class UnsupportedWavError(WavFormatError):
    """Valid WAV, but an encoding outside the supported PCM subset."""


class ToneSpec(NamedTuple):
    f_low: float
    f_high: float


def tone_spec(key: str) -> ToneSpec:
    """Return the nominal (low, high) frequency pair for a keypad symbol."""
    try:
        pair = KEY_TONES[key]
    except KeyError:
        raise ValueError(f"not a keypad symbol: {key!r}") from None
    return ToneSpec(*pair)


@dataclass(frozen=True)
class SampleBuffer:
    """Mono audio: sample rate plus float samples in [-1, +1]."""

    rate_hz: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if int(self.rate_hz) != self.rate_hz or self.rate_hz < MIN_RATE_HZ:
            raise ValueError(f"rate_hz must be an integer >= {MIN_RATE_HZ}")
        data = np.asarray(self.samples, dtype=np.float64)
        if data.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if data.size and not np.all(np.isfinite(data)):
            raise ValueError("samples must be finite")
        if data.size and (data.min() < -1.0 or data.max() > 1.0):
            raise ValueError("samples must lie in [-1, +1]")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "rate_hz", int(self.rate_hz))
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_ms(self) -> float:
        return 1000.0 * self.samples.size / self.rate_hz


def split_amplitudes(amplitude: float, twist_db: float) -> tuple[float, float]:
    """Per-tone amplitudes for a pair with the given level difference.

    The difference is split symmetrically about ``amplitude`` so that
    high_dB - low_dB == twist_db while the sum stays clear of clipping
    for moderate twists.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    half = 10.0 ** (twist_db / 40.0)
    a_low = amplitude / half
    a_high = amplitude * half
    if a_low + a_high > 1.0 + 1e-12:
        raise ValueError(
            f"amplitude {amplitude} with twist {twist_db} dB would clip "
            f"(per-tone sum {a_low + a_high:.3f} > 1.0)"
        )
    return a_low, a_high


def dual_tone_samples(
    f_low: float,
    f_high: float,
    indices: np.ndarray,
    rate_hz: int,
    a_low: float,
    a_high: float,
) -> np.ndarray:
    """Evaluate the two-tone sum at integer sample indices.

    Index 0 is the press instant (zero phase). Shared by the batch renderer
    and the streaming engine so a held key is sample-identical either way.
    """
    k_low = 2.0 * np.pi * f_low / rate_hz
    k_high = 2.0 * np.pi * f_high / rate_hz
    idx = np.asarray(indices, dtype=np.float64)
    return a_low * np.sin(k_low * idx) + a_high * np.sin(k_high * idx)


def dual_tone(
    f_low: float,
    f_high: float,
    duration_ms: float,
    rate_hz: int = DEFAULT_RATE_HZ,
    amplitude: float = DEFAULT_AMPLITUDE,
    twist_db: float = 0.0,
) -> SampleBuffer:
    """Synthesize an arbitrary two-tone burst (not restricted to the grid)."""
    if duration_ms <= 0:
        raise ValueError("duration_ms must be positive")
    if rate_hz < MIN_RATE_HZ:
        raise ValueError(f"rate_hz must be >= {MIN_RATE_HZ}")
    if not (0 < f_low < f_high):
        raise ValueError("need 0 < f_low < f_high")
    a_low, a_high = split_amplitudes(amplitude, twist_db)
    n = round(rate_hz * duration_ms / 1000.0)
    samples = dual_tone_samples(f_low, f_high, np.arange(n), rate_hz, a_low, a_high)
    return SampleBuffer(rate_hz, samples)


def synthesize(
    key: str,
    duration_ms: float,
    rate_hz: int = DEFAULT_RATE_HZ,
    amplitude: float = DEFAULT_AMPLITUDE,
    twist_db: float = 0.0,
) -> SampleBuffer:
    """Synthesize a keypad symbol's dual tone."""
    spec = tone_spec(key)
    return dual_tone(spec.f_low, spec.f_high, duration_ms, rate_hz, amplitude, twist_db)


@dataclass(frozen=True)
class KeyEvent:
    """One key press: symbol, onset in ms, and hold duration in ms."""

    key: str
    press_at_ms: float
    hold_ms: float

    def __post_init__(self) -> None:
        tone_spec(self.key)
        if self.press_at_ms < 0:
            raise ValueError("press_at_ms must be >= 0")
        if self.hold_ms <= 0:
            raise ValueError("hold_ms must be positive")

    @property
    def release_at_ms(self) -> float:
        return self.press_at_ms + self.hold_ms


def validate_script(script: Sequence[KeyEvent]) -> None:
    """Reject overlapping or out-of-order events."""
    for prev, nxt in zip(script, script[1:]):
        if nxt.press_at_ms <= prev.press_at_ms:
            raise ValueError("events must have strictly increasing press times")
        if prev.release_at_ms > nxt.press_at_ms:
            raise ValueError(
                f"overlapping events: {prev.key!r} held past press of {nxt.key!r}"
            )


def render_script(
    script: Sequence[KeyEvent],
    rate_hz: int = DEFAULT_RATE_HZ,
    amplitude: float = DEFAULT_AMPLITUDE,
    twist_db: float = 0.0,
    tail_ms: float = 0.0,
) -> SampleBuffer:
    """Render a key script to audio: tones inside holds, exact zeros between."""
    validate_script(script)
    end_ms = max([ev.release_at_ms for ev in script], default=0.0) + tail_ms
    total = round(rate_hz * end_ms / 1000.0)
    out = np.zeros(total)
    for ev in script:
        start = round(rate_hz * ev.press_at_ms / 1000.0)
        burst = synthesize(ev.key, ev.hold_ms, rate_hz, amplitude, twist_db)
        out[start : start + len(burst)] = burst.samples
    return SampleBuffer(rate_hz, out)


def write_wav(path, buffer: SampleBuffer) -> None:
    """Write 16-bit mono PCM (RIFF/WAVE, little-endian)."""
    pcm = np.round(buffer.samples * _PCM_FULL_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(buffer.rate_hz)
        fh.writeframes(pcm.tobytes())


def read_wav(path) -> SampleBuffer:
    """Read 16-bit mono PCM at an accepted rate; everything else errors."""
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            comp = fh.getcomptype()
            rate = fh.getframerate()
            nframes = fh.getnframes()
            raw = fh.readframes(nframes)
    except (wave.Error, EOFError) as exc:
        raise MalformedWavError(f"malformed WAV file: {exc}") from exc
    if comp != "NONE":
        raise UnsupportedWavError(f"unsupported encoding: {comp}")
    if channels != 1:
        raise UnsupportedWavError(f"unsupported channel count: {channels}")
    if width != 2:
        raise UnsupportedWavError(f"unsupported sample width: {width * 8} bit")
    if rate not in ACCEPTED_WAV_RATES:
        raise UnsupportedWavError(f"unsupported sample rate: {rate}")
    pcm = np.frombuffer(raw, dtype="<i2")
    samples = np.maximum(pcm / _PCM_FULL_SCALE, -1.0)
    return SampleBuffer(rate, samples)
