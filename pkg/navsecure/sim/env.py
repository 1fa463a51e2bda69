"""
Deterministic 2D driving environment.

Observations hold K ray distances (meters), the ego speed (m/s), the heading error to the centerline
(radians), the signed lateral offset (meters) and the progress fraction towards the goal.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from navsecure.config import SimConfig
from navsecure.exceptions.data import InvalidActionError
from navsecure.sim.intervention import Mover, intervention_oracle, reset_position
from navsecure.sim.scenario import ScenarioSpec, domain_randomize
from navsecure.sim.sensors import cast_rays, ray_angles
from navsecure.sim.track import Track
from navsecure.sim.vehicle import VehicleState, bicycle_step, wrap_angle

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    state: VehicleState
    """Vehicle state after the step, after any intervention reset."""
    observation: np.ndarray
    reward: float
    cost: float
    terminated: bool
    """Collision or goal."""
    truncated: bool
    """Horizon reached."""
    info: Dict[str, Any] = field(default_factory=dict)
    """
    intervened, collision, goal, distance (driven this step), position and speed (driven, before any reset),
    progress.
    """


class DrivingEnv:
    """
    One environment instance; use one per thread.
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.spec: Optional[ScenarioSpec] = None
        self.track: Optional[Track] = None
        self.state: Optional[VehicleState] = None
        self.time = 0.0
        self.steps = 0
        self.interventions = 0
        self._boundaries: List[np.ndarray] = []
        self._noise = np.random.default_rng(0)

    @property
    def observation_size(self) -> int:
        return self.config.observation_size

    def reset(self, spec: ScenarioSpec, seed: int) -> Tuple[VehicleState, np.ndarray]:
        """
        Places the vehicle at the start of a randomised instance of the scenario, at rest.
        The same (spec, seed) always gives the same episode.
        """
        spec.validate()
        self.spec = domain_randomize(spec, seed)
        self.track = self.spec.track()
        self._boundaries = [self.track.boundary(self.spec.half_width), self.track.boundary(-self.spec.half_width)]
        self._noise = np.random.default_rng([seed, 1])
        x, y, heading = self.track.point_at(0.0)
        self.state = VehicleState(x, y, heading, 0.0)
        self.time = 0.0
        self.steps = 0
        self.interventions = 0
        return self.state, self.observe()

    def movers(self, time: Optional[float] = None) -> List[Mover]:
        time = self.time if time is None else time
        movers = [Mover(o.x, o.y, o.radius) for o in self.spec.obstacles]
        for agent in self.spec.agents:
            (x, y), (vx, vy) = agent.state(time)
            movers.append(Mover(x, y, agent.radius, vx, vy))
        return movers

    def observe(self) -> np.ndarray:
        config = self.config
        projection = self.track.project(self.state.x, self.state.y)
        circles = [(m.x, m.y, m.radius) for m in self.movers()]
        rays = cast_rays(self.state.x, self.state.y, ray_angles(self.state.heading, config.ray_count, config.ray_fov),
                         circles, self._boundaries, config.ray_range)
        if self.spec.sensor_noise > 0.0:
            rays = np.clip(rays + self._noise.normal(0.0, self.spec.sensor_noise, size=rays.shape),
                           0.0, config.ray_range)
        progress = min(max(projection.s / self.spec.goal, 0.0), 1.0)
        ego = [self.state.speed, wrap_angle(self.state.heading - projection.tangent), projection.offset, progress]
        return np.concatenate([rays, ego])

    def normalize(self, observation: np.ndarray) -> np.ndarray:
        """
        Scales an observation to roughly unit range for learning.
        """
        config = self.config
        scale = np.concatenate([np.full(config.ray_count, config.ray_range),
                                [config.max_speed, math.pi, self.spec.half_width, 1.0]])
        return np.asarray(observation, dtype=np.float64) / scale

    def is_unsafe(self, state: VehicleState, time: float) -> Tuple[bool, bool]:
        """
        :return: (unsafe, collision). Unsafe covers the unsafe radius of every obstacle and agent, leaving the
                 lane and hazard zones; collision only the unsafe radius of obstacles and agents.
        """
        collision = any(math.hypot(state.x - m.x, state.y - m.y) < m.radius + self.config.unsafe_margin
                        for m in self.movers(time))
        off_lane = abs(self.track.project(state.x, state.y).offset) > self.spec.half_width
        hazard = any(math.hypot(state.x - h.x, state.y - h.y) < h.radius for h in self.spec.hazards)
        return collision or off_lane or hazard, collision

    def step(self, action) -> StepResult:
        """
        Advances the simulation by one timestep.

        :param action: (steer, throttle), both in [-1, 1].
        :raises InvalidActionError: If the action is malformed or out of range.
        """
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (2,) or not np.all(np.isfinite(action)) or np.any(np.abs(action) > 1.0):
            raise InvalidActionError(f"Actions must be two values in [-1, 1], got {action.tolist()}.")
        config = self.config
        previous = self.state
        previous_s = self.track.project(previous.x, previous.y).s
        driven = bicycle_step(previous, float(action[0]), float(action[1]), config, self.spec.friction, self.spec.drag)
        self.time = (self.steps + 1) * config.dt
        self.steps += 1

        projection = self.track.project(driven.x, driven.y)
        unsafe, collision = self.is_unsafe(driven, self.time)
        goal = projection.s >= self.spec.goal
        reward = (projection.s - previous_s) - config.lateral_weight * abs(projection.offset) \
            - config.action_weight * float(action @ action)
        terminated = collision or goal
        truncated = not terminated and self.steps >= self.spec.horizon
        info = {"intervened": False, "collision": collision, "goal": goal,
                "distance": math.hypot(driven.x - previous.x, driven.y - previous.y),
                "position": (driven.x, driven.y), "speed": driven.speed, "progress": projection.s}

        self.state = driven
        if not terminated and intervention_oracle(driven, self.track, self.spec.half_width, self.movers(), config):
            self.state, placed_s = reset_position(self.track, projection.s, self.movers(), config.unsafe_margin)
            self.interventions += 1
            info["intervened"] = True
            logger.debug("Intervention %d at s=%.2f, vehicle reset to s=%.2f.", self.interventions, projection.s,
                         placed_s)
        return StepResult(self.state, self.observe(), float(reward), 1.0 if unsafe else 0.0, terminated, truncated,
                          info)
