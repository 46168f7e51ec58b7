"""Band-split tone detection: per-frequency energies and pair validation.

The detector estimates energy at the eight nominal grid frequencies with a
Goertzel-style recurrence (single-bin projections over a rectangular
window), estimates the dominant frequency inside each group band, and
declares a valid pair only when all of these hold:

* the group's dominant frequency falls inside exactly one nominal bin's
  tolerance band,
* that bin's energy exceeds, by the dominance margin, any other-bin energy
  beyond what the detected tone itself would leak there (so a second
  in-group tone is rejected while band-edge leakage is not),
* the two selected bins jointly carry at least ``signal_floor`` of the
  window's energy (this is what rejects speech-like and noise windows),
* the level difference between the two tones is within the twist limit
  (this is what rejects single tones, whose opposite-group "tone" is
  leakage tens of dB down).

Two built-in profiles exist. ``standard`` uses symmetric 2% tolerance
bands. ``paper-replication`` widens acceptance to 6% below nominal and 3%
above, so tone pairs dragged several percent low by a slow source clock
(low tones suffering more than high ones) still resolve to the intended
key even when a deviated tone sits marginally closer to the neighbouring
bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from dtmf_drive.signal import (
    HIGH_GROUP_HZ,
    KEY_FOR_PAIR,
    LOW_GROUP_HZ,
    SampleBuffer,
)

_LOW = np.array(LOW_GROUP_HZ)
_HIGH = np.array(HIGH_GROUP_HZ)

#: Frequency-estimation probe grids (Hz): band edges cover the widest
#: allowed tolerance (8%) around the outermost nominal frequencies.
_PROBE_STEP_HZ = 10.0
_LOW_PROBES = np.arange(635.0, 1021.0, _PROBE_STEP_HZ)
_HIGH_PROBES = np.arange(1110.0, 1771.0, _PROBE_STEP_HZ)

_WINDOW_SECONDS = 102 / 8000  # 12.75 ms, the reference analysis span

PROFILES = ("standard", "paper-replication")


@dataclass(frozen=True)
class DetectorConfig:
    window_samples: int = 102
    hop_samples: int = 51
    rate_hz: int = 8000
    rel_freq_tolerance: float = 0.02
    rel_freq_tolerance_up: Optional[float] = None
    twist_limit_db: float = 8.0
    dominance_margin_db: float = 8.0
    signal_floor: float = 0.5

    def __post_init__(self) -> None:
        if self.window_samples < 64:
            raise ValueError("window_samples must be >= 64")
        if not (0 < self.hop_samples <= self.window_samples):
            raise ValueError("hop_samples must be in (0, window_samples]")
        if not (0 < self.rel_freq_tolerance <= 0.08):
            raise ValueError("rel_freq_tolerance must be in (0, 0.08]")
        up = self.rel_freq_tolerance_up
        if up is not None and not (0 < up <= 0.08):
            raise ValueError("rel_freq_tolerance_up must be in (0, 0.08]")
        if not (0 < self.signal_floor < 1):
            raise ValueError("signal_floor must be in (0, 1)")

    @property
    def tolerance_down(self) -> float:
        return self.rel_freq_tolerance

    @property
    def tolerance_up(self) -> float:
        if self.rel_freq_tolerance_up is None:
            return self.rel_freq_tolerance
        return self.rel_freq_tolerance_up

    @property
    def window_ms(self) -> float:
        return 1000.0 * self.window_samples / self.rate_hz

    @property
    def hop_ms(self) -> float:
        return 1000.0 * self.hop_samples / self.rate_hz

    @classmethod
    def for_rate(cls, rate_hz: int, profile: str = "standard") -> "DetectorConfig":
        """Profile defaults scaled so the analysis window spans ~12.75 ms."""
        window = max(64, round(rate_hz * _WINDOW_SECONDS))
        hop = max(1, window // 2)
        base = cls(window_samples=window, hop_samples=hop, rate_hz=rate_hz)
        if profile == "standard":
            return base
        if profile == "paper-replication":
            return replace(base, rel_freq_tolerance=0.06, rel_freq_tolerance_up=0.03)
        raise ValueError(f"unknown profile {profile!r} (expected one of {PROFILES})")


@dataclass(frozen=True)
class BandEnergies:
    """Window-normalized energy per nominal frequency, plus the estimated
    dominant frequency of each group and the window's total mean-square.

    Energies are scaled so a full-scale sinusoid exactly on a bin reports
    (amplitude^2)/2, i.e. its share of the window mean-square energy.
    """

    e_low: np.ndarray
    e_high: np.ndarray
    f_low_hz: Optional[float]
    f_high_hz: Optional[float]
    total_energy: float


@dataclass(frozen=True)
class ToneFrame:
    """One detector hop: window end time, pair validity, candidate key.

    ``strength`` scales the guard charge this frame contributes, in units
    of the hop duration. Continuation frames carry roughly 1 (the plain
    ramp); the frame that begins a run may carry up to window/hop to credit
    the tone time that elapsed while the detector was confirming the pair,
    so accumulated charge tracks true tone-present time. Hand-built frames
    default to 1.
    """

    t_ms: float
    est_active: bool
    candidate: Optional[str] = None
    strength: float = 1.0

    def __post_init__(self) -> None:
        if self.candidate is not None and not self.est_active:
            raise ValueError("candidate requires est_active")


def _goertzel_energies(windows: np.ndarray, freqs: np.ndarray, rate_hz: int) -> np.ndarray:
    """Goertzel recurrence per frequency, vectorized across windows.

    Returns energies shaped (n_windows, n_freqs), normalized to 2|X|^2/N^2
    so an on-bin sinusoid of amplitude a reports a^2/2.
    """
    wins = np.atleast_2d(windows)
    m, n = wins.shape
    omega = 2.0 * np.pi * np.asarray(freqs) / rate_hz
    coeff = 2.0 * np.cos(omega)
    s1 = np.zeros((m, omega.size))
    s2 = np.zeros((m, omega.size))
    for k in range(n):
        s0 = wins[:, k : k + 1] + coeff * s1 - s2
        s2 = s1
        s1 = s0
    power = s1 * s1 + s2 * s2 - coeff * s1 * s2
    return 2.0 * power / (n * n)


_PROBE_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _probe_matrices(rate_hz: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projection matrices for the probe grids plus the estimation taper.

    Frequency estimation uses a raised-cosine taper: the rectangular
    window's far sidelobes from the opposite tone group otherwise bias the
    peak location by several hertz, which matters at the tolerance-band
    edges. Bin energies are unaffected (Goertzel stays rectangular).
    """
    key = (rate_hz, n)
    cached = _PROBE_CACHE.get(key)
    if cached is None:
        idx = np.arange(n)
        taper = 0.5 - 0.5 * np.cos(2.0 * np.pi * (idx + 0.5) / n)
        # single precision suffices for the coarse argmax; the refinement
        # pass runs in double precision
        low = np.exp(-2j * np.pi * np.outer(idx, _LOW_PROBES) / rate_hz).astype(
            np.complex64
        )
        high = np.exp(-2j * np.pi * np.outer(idx, _HIGH_PROBES) / rate_hz).astype(
            np.complex64
        )
        cached = (low, high, taper)
        _PROBE_CACHE[key] = cached
    return cached


def _peak_frequency(power: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """Per-row argmax over the probe grid with parabolic refinement."""
    power = np.atleast_2d(power)
    idx = np.argmax(power, axis=1)
    est = probes[idx].astype(np.float64).copy()
    interior = (idx > 0) & (idx < probes.size - 1)
    if np.any(interior):
        rows = np.nonzero(interior)[0]
        i = idx[rows]
        p_m = power[rows, i - 1]
        p_0 = power[rows, i]
        p_p = power[rows, i + 1]
        denom = p_m - 2.0 * p_0 + p_p
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = 0.5 * (p_m - p_p) / denom
        delta = np.where(np.isfinite(delta), np.clip(delta, -1.0, 1.0), 0.0)
        est[rows] = probes[i] + delta * _PROBE_STEP_HZ
    return est


def _projection_power(windows: np.ndarray, freqs: np.ndarray, rate_hz: int) -> np.ndarray:
    """|projection|^2 at a per-window frequency; freqs shaped (m, k)."""
    idx = np.arange(windows.shape[1])
    phases = -2j * np.pi * freqs[:, :, np.newaxis] * idx / rate_hz
    proj = np.einsum("mn,mkn->mk", windows.astype(complex), np.exp(phases))
    return np.abs(proj) ** 2


_REFINE_STEP_HZ = 2.0


def _refine_frequency(windows: np.ndarray, coarse: np.ndarray, rate_hz: int) -> np.ndarray:
    """Second parabolic pass on a fine local grid around the coarse peak."""
    offsets = np.array([-_REFINE_STEP_HZ, 0.0, _REFINE_STEP_HZ])
    freqs = coarse[:, np.newaxis] + offsets[np.newaxis, :]
    power = _projection_power(windows, freqs, rate_hz)
    p_m, p_0, p_p = power[:, 0], power[:, 1], power[:, 2]
    denom = p_m - 2.0 * p_0 + p_p
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = 0.5 * (p_m - p_p) / denom
    delta = np.where(np.isfinite(delta), np.clip(delta, -1.0, 1.0), 0.0)
    return coarse + delta * _REFINE_STEP_HZ


def _estimate_group_freqs(windows: np.ndarray, rate_hz: int) -> tuple[np.ndarray, np.ndarray]:
    wins = np.atleast_2d(windows)
    low_m, high_m, taper = _probe_matrices(rate_hz, wins.shape[1])
    tapered = wins * taper
    coarse_in = tapered.astype(np.complex64)
    p_low = np.abs(coarse_in @ low_m) ** 2
    p_high = np.abs(coarse_in @ high_m) ** 2
    f_low = _refine_frequency(tapered, _peak_frequency(p_low, _LOW_PROBES), rate_hz)
    f_high = _refine_frequency(tapered, _peak_frequency(p_high, _HIGH_PROBES), rate_hz)
    return f_low, f_high


def _band_index(
    f_est: Optional[float], nominals: tuple[float, ...], cfg: DetectorConfig
) -> Optional[int]:
    """Index of the unique nominal bin whose tolerance band holds f_est."""
    if f_est is None or not math.isfinite(f_est):
        return None
    hit = None
    for i, nom in enumerate(nominals):
        if nom * (1.0 - cfg.tolerance_down) <= f_est <= nom * (1.0 + cfg.tolerance_up):
            if hit is not None:
                return None
            hit = i
    return hit


#: Allowance (power ratio) for cross-term wobble on top of predicted
#: single-tone leakage when judging dominance.
_LEAK_ALLOWANCE = 2.0


def _dirichlet_power(delta_hz: float, n: int, rate_hz: int) -> float:
    """|window response|^2 of an n-sample rectangular window at an offset."""
    x = math.pi * delta_hz / rate_hz
    if abs(x) < 1e-12:
        return 1.0
    den = n * math.sin(x)
    if abs(den) < 1e-300:
        return 1.0
    r = math.sin(n * x) / den
    return r * r


def _dominates(
    energies: list[float],
    sel: int,
    nominals: tuple[float, ...],
    f_est: float,
    cfg: DetectorConfig,
) -> bool:
    """Margin test against other-bin energy beyond predicted leakage.

    A single tone near a band edge legitimately leaks into the adjacent
    bin, so the expected single-tone response at each other bin (Dirichlet
    kernel around the estimated frequency) is discounted first; only the
    excess must stay ``dominance_margin_db`` below the selected bin.
    """
    sel_energy = energies[sel]
    if sel_energy <= 0.0:
        return False
    sel_response = max(
        _dirichlet_power(nominals[sel] - f_est, cfg.window_samples, cfg.rate_hz), 1e-12
    )
    scale = _LEAK_ALLOWANCE * sel_energy / sel_response
    worst = 0.0
    for i, nom in enumerate(nominals):
        if i == sel:
            continue
        predicted = scale * _dirichlet_power(nom - f_est, cfg.window_samples, cfg.rate_hz)
        excess = energies[i] - predicted
        if excess > worst:
            worst = excess
    if worst <= 0.0:
        return True
    margin_db = 10.0 * math.log10(sel_energy / worst)
    return margin_db >= cfg.dominance_margin_db


def analyze_window(samples: np.ndarray, rate_hz: int) -> BandEnergies:
    """Full analysis of one raw window: bin energies, estimates, total."""
    x = np.asarray(samples, dtype=np.float64)[np.newaxis, :]
    energies = _goertzel_energies(x, np.concatenate([_LOW, _HIGH]), rate_hz)[0]
    total = float(np.mean(x[0] ** 2))
    f_low, f_high = _estimate_group_freqs(x, rate_hz)
    return BandEnergies(
        e_low=energies[:4],
        e_high=energies[4:],
        f_low_hz=float(f_low[0]),
        f_high_hz=float(f_high[0]),
        total_energy=total,
    )


def band_energies(window: SampleBuffer, cfg: DetectorConfig) -> BandEnergies:
    """Analyze one window; its length must equal ``cfg.window_samples``."""
    if len(window) != cfg.window_samples:
        raise ValueError(
            f"wrong window length: got {len(window)}, need {cfg.window_samples}"
        )
    return analyze_window(window.samples, window.rate_hz)


def _selected_pair(e: BandEnergies, cfg: DetectorConfig) -> Optional[tuple[int, int]]:
    if e.total_energy <= 0.0:
        return None
    e_low = [float(v) for v in e.e_low]
    e_high = [float(v) for v in e.e_high]
    # Cheap rejection: even the best bins jointly below the floor.
    if max(e_low) + max(e_high) < cfg.signal_floor * e.total_energy:
        return None

    pair = []
    for energies, nominals, f_est in (
        (e_low, LOW_GROUP_HZ, e.f_low_hz),
        (e_high, HIGH_GROUP_HZ, e.f_high_hz),
    ):
        sel = _band_index(f_est, nominals, cfg)
        if sel is None:
            return None
        if not _dominates(energies, sel, nominals, f_est, cfg):
            return None
        pair.append(sel)

    low_e = e_low[pair[0]]
    high_e = e_high[pair[1]]
    if low_e + high_e < cfg.signal_floor * e.total_energy:
        return None
    if low_e <= 0.0 or high_e <= 0.0:
        return None
    twist_db = 10.0 * math.log10(high_e / low_e)
    if abs(twist_db) > cfg.twist_limit_db:
        return None
    return pair[0], pair[1]


def classify(e: BandEnergies, cfg: DetectorConfig) -> Optional[str]:
    """Key symbol for a valid tone pair, or None (absence is rejection)."""
    pair = _selected_pair(e, cfg)
    if pair is None:
        return None
    return KEY_FOR_PAIR[pair]


def pair_strength(e: BandEnergies, pair: tuple[int, int]) -> float:
    """Selected pair's share of window energy, clamped to [0, 1].

    For a window only partially covered by a burst this approximates the
    covered fraction of the window.
    """
    if e.total_energy <= 0.0:
        return 0.0
    share = (float(e.e_low[pair[0]]) + float(e.e_high[pair[1]])) / e.total_energy
    return float(min(1.0, share))


#: Conservative shrink of the run-start catch-up credit (ms), absorbing the
#: coverage-estimate wobble so short bursts are never over-credited.
LEAD_CREDIT_SAFETY_MS = 1.0


def frame_strength(
    e: BandEnergies, pair: tuple[int, int], run_start: bool, cfg: DetectorConfig
) -> float:
    """Guard charge for this frame, in hops.

    The estimate ``share * window`` approximates the tone time visible in
    the window. A run-starting frame credits all of it (minus a safety
    margin); a continuation frame credits only the part beyond what the
    previous overlapping window already covered, clamped to one hop.
    """
    share = pair_strength(e, pair)
    w = cfg.window_ms
    h = cfg.hop_ms
    if run_start:
        credit = min(max(0.0, share * w - LEAD_CREDIT_SAFETY_MS), w)
    else:
        credit = min(max(0.0, share * w - (w - h)), h)
    return credit / h


def stream_detect(buffer: SampleBuffer, cfg: DetectorConfig) -> list[ToneFrame]:
    """Slide the analysis window over a buffer, one frame per hop.

    ``est_active`` is true exactly where :func:`classify` yields a key.
    Frequency estimation runs only on windows that survive the energy-floor
    precheck; the decisions are identical to per-window classification.
    """
    x = buffer.samples
    if x.size < cfg.window_samples:
        raise ValueError("buffer shorter than one analysis window")
    wins = np.lib.stride_tricks.sliding_window_view(x, cfg.window_samples)[
        :: cfg.hop_samples
    ]
    m = wins.shape[0]
    energies = _goertzel_energies(wins, np.concatenate([_LOW, _HIGH]), buffer.rate_hz)
    totals = np.mean(wins**2, axis=1)
    joint_best = energies[:, :4].max(axis=1) + energies[:, 4:].max(axis=1)
    promising = (totals > 0.0) & (joint_best >= cfg.signal_floor * totals)

    f_low = np.full(m, np.nan)
    f_high = np.full(m, np.nan)
    if np.any(promising):
        fl, fh = _estimate_group_freqs(np.ascontiguousarray(wins[promising]), buffer.rate_hz)
        f_low[promising] = fl
        f_high[promising] = fh

    frames: list[ToneFrame] = []
    prev_candidate: Optional[str] = None
    for i in range(m):
        t_ms = 1000.0 * (i * cfg.hop_samples + cfg.window_samples) / buffer.rate_hz
        if not promising[i]:
            frames.append(ToneFrame(t_ms=t_ms, est_active=False, strength=0.0))
            prev_candidate = None
            continue
        be = BandEnergies(
            e_low=energies[i, :4],
            e_high=energies[i, 4:],
            f_low_hz=float(f_low[i]),
            f_high_hz=float(f_high[i]),
            total_energy=float(totals[i]),
        )
        pair = _selected_pair(be, cfg)
        if pair is None:
            frames.append(ToneFrame(t_ms=t_ms, est_active=False, strength=0.0))
            prev_candidate = None
        else:
            candidate = KEY_FOR_PAIR[pair]
            frames.append(
                ToneFrame(
                    t_ms=t_ms,
                    est_active=True,
                    candidate=candidate,
                    strength=frame_strength(be, pair, prev_candidate != candidate, cfg),
                )
            )
            prev_candidate = candidate
    return frames
