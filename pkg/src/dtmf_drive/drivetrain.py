"""Controller decision logic and the quad half-bridge driver model.

A 4-bit key code selects an output-port nibble; the nibble's bit pairs
(IN2,IN1) and (IN4,IN3) drive the left and right motor channels. Codes
outside the command table leave the port unchanged, mirroring firmware
whose switch statement has no default branch; a strict mode stops instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

logger = logging.getLogger(__name__)


class Direction(Enum):
    FORWARD = "fwd"
    BACKWARD = "back"
    STOP = "stop"


class WheelDrive(NamedTuple):
    left: Direction
    right: Direction


@dataclass(frozen=True)
class DriverEnables:
    en1: bool = True  # gates the left channel (drivers 1 and 2)
    en2: bool = True  # gates the right channel (drivers 3 and 4)


#: Key code -> port nibble (IN4 IN3 IN2 IN1).
COMMAND_PORTS: dict[int, int] = {
    0b0010: 0x0A,  # forward
    0b1000: 0x05,  # backward
    0b0100: 0x08,  # left turn: right side forward, left stopped
    0b0110: 0x02,  # right turn: left side forward, right stopped
    0b0101: 0x00,  # stop
}

_PAIR_DIRECTION = {
    (1, 0): Direction.FORWARD,
    (0, 1): Direction.BACKWARD,
    (0, 0): Direction.STOP,
    (1, 1): Direction.STOP,
}


def control_decision(code: int, current: int, strict: bool = False) -> int:
    """Port nibble for a key code; unmapped codes hold (or stop, if strict)."""
    if not 0 <= code <= 0xF:
        raise ValueError(f"code must be a 4-bit value, got {code!r}")
    mapped = COMMAND_PORTS.get(code)
    if mapped is not None:
        return mapped
    return 0x00 if strict else current


def _side(nibble: int, low_bit: int, enabled: bool) -> Direction:
    if not enabled:
        return Direction.STOP
    pair = ((nibble >> (low_bit + 1)) & 1, (nibble >> low_bit) & 1)
    if pair == (1, 1):
        logger.warning("both half-bridge inputs high (nibble 0x%02x): forcing stop", nibble)
    return _PAIR_DIRECTION[pair]


def driver_outputs(nibble: int, enables: DriverEnables = DriverEnables()) -> WheelDrive:
    """Wheel directions commanded by a port nibble."""
    if not 0 <= nibble <= 0xF:
        raise ValueError(f"nibble must be a 4-bit value, got {nibble!r}")
    return WheelDrive(
        left=_side(nibble, 0, enables.en1),
        right=_side(nibble, 2, enables.en2),
    )


_LABELS = {
    (Direction.FORWARD, Direction.FORWARD): "Forward",
    (Direction.BACKWARD, Direction.BACKWARD): "Backward",
    (Direction.STOP, Direction.FORWARD): "Left turn",
    (Direction.FORWARD, Direction.STOP): "Right turn",
    (Direction.STOP, Direction.STOP): "Stop",
}


def decision_label(drive: WheelDrive) -> str:
    """Human label for a drive state; combinations outside the command set
    are reported generically."""
    return _LABELS.get((drive.left, drive.right), f"{drive.left.value}/{drive.right.value}")
