"""
Programmatic stand-in for a safety driver: decides when to take over and where to put the vehicle back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from navsecure.config import SimConfig
from navsecure.sim.track import Track
from navsecure.sim.vehicle import VehicleState

RESET_STEP = 0.5


@dataclass(frozen=True)
class Mover:
    """
    Anything the vehicle must keep clear of, with its velocity (zero for static obstacles).
    """
    x: float
    y: float
    radius: float
    vx: float = 0.0
    vy: float = 0.0


def time_to_collision(vehicle: VehicleState, mover: Mover, clearance: float) -> float:
    """
    Time until the vehicle comes within `mover.radius + clearance` of the mover, both keeping their current
    velocities. Zero when already inside, infinity when it never happens.
    """
    px, py = mover.x - vehicle.x, mover.y - vehicle.y
    wx = mover.vx - vehicle.speed * math.cos(vehicle.heading)
    wy = mover.vy - vehicle.speed * math.sin(vehicle.heading)
    reach = mover.radius + clearance
    c = px * px + py * py - reach * reach
    if c <= 0.0:
        return 0.0
    a = wx * wx + wy * wy
    b = 2.0 * (px * wx + py * wy)
    discriminant = b * b - 4.0 * a * c
    if a == 0.0 or discriminant < 0.0:
        return math.inf
    t = (-b - math.sqrt(discriminant)) / (2.0 * a)
    return t if t >= 0.0 else math.inf


def intervention_oracle(vehicle: VehicleState, track: Track, half_width: float, movers: Sequence[Mover],
                        config: SimConfig) -> bool:
    """
    True when a collision is less than ttc_min seconds away or the vehicle is at least
    intervention_offset_factor half-widths off the centerline.
    """
    if abs(track.project(vehicle.x, vehicle.y).offset) >= config.intervention_offset_factor * half_width:
        return True
    return any(time_to_collision(vehicle, mover, config.unsafe_margin) < config.ttc_min for mover in movers)


def reset_position(track: Track, s: float, movers: Sequence[Mover], clearance: float) -> Tuple[VehicleState, float]:
    """
    Stationary vehicle on the centerline at arc length s, backed up until it is clear of every mover.

    :return: The state and the arc length it was placed at.
    """
    while True:
        x, y, heading = track.point_at(s)
        clear = all(math.hypot(x - m.x, y - m.y) > m.radius + clearance for m in movers)
        if clear or s <= 0.0:
            return VehicleState(x, y, heading, 0.0), s
        s = max(0.0, s - RESET_STEP)
