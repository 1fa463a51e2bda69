from __future__ import annotations

import math
from dataclasses import dataclass

from navsecure.config import SimConfig


def wrap_angle(angle: float) -> float:
    """
    Wraps to (-pi, pi].
    """
    return math.pi - (math.pi - angle) % (2.0 * math.pi)


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float


def bicycle_step(state: VehicleState, steer: float, throttle: float, config: SimConfig, friction: float = 1.0,
                 drag: float = 0.0) -> VehicleState:
    """
    Kinematic bicycle update over one timestep. The heading turns first, the position then advances along
    the new heading at the current speed, and finally the speed integrates throttle against drag.

    :param steer: Steering command in [-1, 1], scaled by the maximum steering angle.
    :param throttle: Throttle command in [-1, 1], scaled by the maximum acceleration; negative brakes.
    :param friction: Multiplies the available acceleration.
    :param drag: Deceleration per unit speed, in 1/s.
    """
    dt = config.dt
    heading = wrap_angle(state.heading + state.speed / config.wheelbase * math.tan(steer * config.max_steer) * dt)
    x = state.x + state.speed * math.cos(heading) * dt
    y = state.y + state.speed * math.sin(heading) * dt
    speed = state.speed + (throttle * config.max_accel * friction - drag * state.speed) * dt
    return VehicleState(x, y, heading, min(max(speed, 0.0), config.max_speed))
