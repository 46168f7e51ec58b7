"""Guard-time validation and code latching behind the tone detector.

A dimensionless integrator ``v_c`` stands in for the timing capacitor
voltage: it ramps up at 1/t_gtp while a stable candidate is present and
down at 1/t_gta otherwise. Crossing 1 latches the candidate's 4-bit code
and raises the delayed-steering flag; draining to 0 releases the flag.
The latched code itself persists after release, which is why motion
continues until a new code arrives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from dtmf_drive.decoder import ToneFrame

#: Keypad symbol -> 4-bit output word Q4..Q1.
CODE_OF: dict[str, int] = {
    "1": 0b0001,
    "2": 0b0010,
    "3": 0b0011,
    "4": 0b0100,
    "5": 0b0101,
    "6": 0b0110,
    "7": 0b0111,
    "8": 0b1000,
    "9": 0b1001,
    "0": 0b1010,
    "*": 0b1011,
    "#": 0b1100,
    "A": 0b1101,
    "B": 0b1110,
    "C": 0b1111,
    "D": 0b0000,
}

KEY_OF: dict[int, str] = {code: key for key, code in CODE_OF.items()}

LATCHED = "latched"
RELEASED = "released"

_SATURATE_EPS = 1e-9


def code_of(key: str) -> int:
    try:
        return CODE_OF[key]
    except KeyError:
        raise ValueError(f"not a keypad symbol: {key!r}") from None


def key_of(code: int) -> str:
    try:
        return KEY_OF[code]
    except KeyError:
        raise ValueError(f"not a 4-bit key code: {code!r}") from None


def code_bits(code: int) -> str:
    return format(code, "04b")


def code_hex(code: int) -> str:
    return f"0x{code:02x}"


@dataclass(frozen=True)
class SteeringConfig:
    t_gtp_ms: float = 27.0
    t_gta_ms: float = 27.0

    def __post_init__(self) -> None:
        if self.t_gtp_ms <= 0 or self.t_gta_ms <= 0:
            raise ValueError("guard times must be positive")

    def max_dt_ms(self) -> float:
        return min(self.t_gtp_ms, self.t_gta_ms) / 4.0


@dataclass(frozen=True)
class SteeringEvent:
    kind: str  # LATCHED or RELEASED
    t_ms: float
    code: Optional[int] = None


@dataclass(frozen=True)
class SteeringState:
    v_c: float = 0.0
    latched: Optional[int] = None
    std_active: bool = False
    pending: Optional[str] = None

    @classmethod
    def initial(cls) -> "SteeringState":
        return cls()


def step(
    state: SteeringState,
    frame: ToneFrame,
    dt_ms: float,
    cfg: SteeringConfig,
) -> tuple[SteeringState, Optional[SteeringEvent]]:
    """Advance the guard integrator by one frame; maybe emit an event.

    ``dt_ms`` must not exceed a quarter of the shorter guard time, so the
    ramp is resolved. A full-strength frame charges by dt/t_gtp; frames
    only partially covered by tone charge proportionally, keeping the
    accumulated charge an estimate of true tone-present time. A candidate
    change restarts the charge from zero. At most one event is emitted per
    step; when a new code validates while the previous one is still
    flagged, the release is emitted first and the latch follows on the
    next step.
    """
    if dt_ms <= 0:
        raise ValueError("dt_ms must be positive")
    if dt_ms > cfg.max_dt_ms() + 1e-9:
        raise ValueError(
            f"dt_ms {dt_ms} too coarse for guard times "
            f"(max {cfg.max_dt_ms():.3f} ms)"
        )

    if frame.est_active and frame.candidate is not None:
        pending = frame.candidate
        v = state.v_c
        if state.pending is not None and state.pending != pending:
            v = 0.0
        strength = max(0.0, frame.strength)
        v = min(1.0, v + strength * dt_ms / cfg.t_gtp_ms)
        if v >= 1.0 - _SATURATE_EPS:
            v = 1.0
            code = code_of(pending)
            if not state.std_active:
                new = SteeringState(v_c=v, latched=code, std_active=True, pending=pending)
                return new, SteeringEvent(LATCHED, frame.t_ms, code)
            if state.latched != code:
                # New pair validated while the flag is still up: drop the
                # flag now, latch on the next step.
                new = SteeringState(
                    v_c=v, latched=state.latched, std_active=False, pending=pending
                )
                return new, SteeringEvent(RELEASED, frame.t_ms)
        return replace(state, v_c=v, pending=pending), None

    v = max(0.0, state.v_c - dt_ms / cfg.t_gta_ms)
    pending = state.pending if v > 0.0 else None
    if v <= 0.0 and state.std_active:
        new = SteeringState(v_c=0.0, latched=state.latched, std_active=False, pending=None)
        return new, SteeringEvent(RELEASED, frame.t_ms)
    return replace(state, v_c=v, pending=pending), None


def _frame_dt_ms(frames: Sequence[ToneFrame]) -> float:
    times = np.array([f.t_ms for f in frames])
    diffs = np.diff(times)
    if np.any(diffs <= 0):
        raise ValueError("frames must be strictly time-ordered")
    dt = float(np.median(diffs))
    if not np.allclose(diffs, dt, rtol=1e-9, atol=1e-9):
        raise ValueError("frames must be uniformly spaced (or pass dt_ms)")
    return dt


def run(
    frames: Iterable[ToneFrame],
    cfg: SteeringConfig,
    dt_ms: Optional[float] = None,
) -> list[SteeringEvent]:
    """Fold :func:`step` over a frame sequence and collect the events."""
    frames = list(frames)
    if not frames:
        return []
    if dt_ms is None:
        if len(frames) == 1:
            raise ValueError("dt_ms required for a single-frame sequence")
        dt_ms = _frame_dt_ms(frames)
    else:
        times = [f.t_ms for f in frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("frames must be strictly time-ordered")

    state = SteeringState.initial()
    events: list[SteeringEvent] = []
    for frame in frames:
        state, event = step(state, frame, dt_ms, cfg)
        if event is not None:
            events.append(event)
    return events
