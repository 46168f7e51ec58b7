"""Planar differential-drive kinematics for the simulated chassis."""

from __future__ import annotations

import math
from dataclasses import dataclass

from dtmf_drive.drivetrain import Direction, WheelDrive


@dataclass(frozen=True)
class VehiclePose:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0  # radians, counterclockwise from +x, in (-pi, pi]

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.x, self.y, self.theta))):
            raise ValueError("pose components must be finite")


@dataclass(frozen=True)
class VehicleParams:
    wheel_speed_mps: float = 0.2
    track_width_m: float = 0.2
    dt_s: float = 0.001

    def __post_init__(self) -> None:
        if self.wheel_speed_mps <= 0:
            raise ValueError("wheel_speed_mps must be positive")
        if self.track_width_m <= 0:
            raise ValueError("track_width_m must be positive")
        if not (0 < self.dt_s <= 0.01):
            raise ValueError("dt_s must be in (0, 0.01]")


def _normalize_angle(theta: float) -> float:
    theta = math.remainder(theta, 2.0 * math.pi)
    if theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


def side_velocity(direction: Direction, params: VehicleParams) -> float:
    """Signed ground speed of one wheel side, m/s."""
    if direction is Direction.FORWARD:
        return params.wheel_speed_mps
    if direction is Direction.BACKWARD:
        return -params.wheel_speed_mps
    return 0.0


def step_pose(pose: VehiclePose, drive: WheelDrive, params: VehicleParams) -> VehiclePose:
    """One explicit-Euler step of the differential-drive update."""
    v_l = side_velocity(drive.left, params)
    v_r = side_velocity(drive.right, params)
    if v_l == 0.0 and v_r == 0.0:
        return pose
    v = 0.5 * (v_l + v_r)
    omega = (v_r - v_l) / params.track_width_m
    dt = params.dt_s
    return VehiclePose(
        x=pose.x + v * math.cos(pose.theta) * dt,
        y=pose.y + v * math.sin(pose.theta) * dt,
        theta=_normalize_angle(pose.theta + omega * dt),
    )


def integrate(
    pose: VehiclePose, drive: WheelDrive, params: VehicleParams, duration_s: float
) -> VehiclePose:
    """Apply :func:`step_pose` repeatedly to cover ``duration_s`` seconds.

    The span is divided into equal substeps no longer than ``params.dt_s``.
    """
    if duration_s < 0:
        raise ValueError("duration_s must be >= 0")
    if duration_s == 0:
        return pose
    n = max(1, math.ceil(round(duration_s / params.dt_s, 9)))
    sub = VehicleParams(
        wheel_speed_mps=params.wheel_speed_mps,
        track_width_m=params.track_width_m,
        dt_s=duration_s / n,
    )
    for _ in range(n):
        pose = step_pose(pose, drive, sub)
    return pose
