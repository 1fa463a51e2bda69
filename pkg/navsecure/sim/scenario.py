"""
Scenario specifications: track, obstacles, scripted agents, hazard zones and the ranges domain
randomisation samples from. Stored as versioned JSON files.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Tuple

import numpy as np

from navsecure.exceptions.data import InvalidScenarioError
from navsecure.sim.track import Track, TrackSegment

logger = logging.getLogger(__name__)

SCHEMA = "navsecure.scenario"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class HazardZone:
    """
    Region that costs 1 per step spent inside it without ending the episode.
    """
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class AgentScript:
    """
    Dynamic agent moving at constant speed along its waypoints, then holding at the last one.
    """
    waypoints: Tuple[Tuple[float, float], ...]
    speed: float
    radius: float
    crossing: bool = False
    """Moves across the track rather than along it."""

    def position(self, time: float) -> Tuple[float, float]:
        return self.state(time)[0]

    def state(self, time: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """
        :return: ((x, y), (vx, vy)) at the given time.
        """
        remaining = self.speed * time
        points = self.waypoints
        for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
            length = math.hypot(x1 - x0, y1 - y0)
            if length == 0.0:
                continue
            ux, uy = (x1 - x0) / length, (y1 - y0) / length
            if remaining < length:
                return (x0 + ux * remaining, y0 + uy * remaining), (ux * self.speed, uy * self.speed)
            remaining -= length
        return points[-1], (0.0, 0.0)


@dataclass(frozen=True)
class RandomizationRanges:
    """
    Spreads around the nominal values of a scenario; all zero disables randomisation.
    """
    obstacle_jitter: float = 0.0
    """Obstacles move uniformly within a disc of this radius, in meters."""
    friction_spread: float = 0.0
    """Friction is drawn from friction * [1 - spread, 1 + spread]."""
    drag_spread: float = 0.0
    """Drag is drawn from drag * [1 - spread, 1 + spread]."""
    sensor_noise_spread: float = 0.0
    """Sensor noise std is drawn from [sensor_noise, sensor_noise + spread], in meters."""

    @property
    def is_zero(self) -> bool:
        return not any((self.obstacle_jitter, self.friction_spread, self.drag_spread, self.sensor_noise_spread))

    def friction_range(self, nominal: float) -> Tuple[float, float]:
        return nominal * (1.0 - self.friction_spread), nominal * (1.0 + self.friction_spread)

    def drag_range(self, nominal: float) -> Tuple[float, float]:
        return nominal * (1.0 - self.drag_spread), nominal * (1.0 + self.drag_spread)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    segments: Tuple[TrackSegment, ...]
    half_width: float
    """Lane half-width, in meters."""
    horizon: int
    """Episode length limit, in steps."""
    goal: float
    """Arc length at which the episode counts as completed, in meters."""
    obstacles: Tuple[Obstacle, ...] = ()
    agents: Tuple[AgentScript, ...] = ()
    hazards: Tuple[HazardZone, ...] = ()
    friction: float = 1.0
    drag: float = 0.05
    sensor_noise: float = 0.0
    randomization: RandomizationRanges = field(default_factory=RandomizationRanges)

    def track(self) -> Track:
        return Track(self.segments)

    @property
    def has_curves(self) -> bool:
        return any(segment.kind == "arc" for segment in self.segments)

    def validate(self) -> None:
        """
        :raises InvalidScenarioError: If the scenario breaks any of its invariants.
        """
        if self.half_width <= 0 or self.horizon < 1:
            raise InvalidScenarioError(f"Scenario '{self.name}' needs a positive half-width and horizon.")
        track = self.track()
        if not 0.0 < self.goal <= track.length:
            raise InvalidScenarioError(f"Goal {self.goal} m of scenario '{self.name}' lies outside its "
                                       f"{track.length:.1f} m track.")
        if self.friction <= 0 or self.drag < 0 or self.sensor_noise < 0:
            raise InvalidScenarioError(f"Scenario '{self.name}' has invalid friction, drag or sensor noise.")
        ranges = self.randomization
        if min(ranges.obstacle_jitter, ranges.friction_spread, ranges.drag_spread, ranges.sensor_noise_spread) < 0 \
                or ranges.friction_spread >= 1.0:
            raise InvalidScenarioError(f"Randomization ranges of scenario '{self.name}' must be non-negative "
                                       f"and the friction spread below 1.")
        for obstacle in self.obstacles:
            if obstacle.radius <= 0 or abs(track.project(obstacle.x, obstacle.y).offset) > self.half_width:
                raise InvalidScenarioError(f"Obstacle at ({obstacle.x}, {obstacle.y}) of scenario '{self.name}' "
                                           f"is outside the track or has no size.")
        for agent in self.agents:
            x, y = agent.waypoints[0]
            if len(agent.waypoints) < 2 or agent.speed < 0 or agent.radius <= 0 \
                    or abs(track.project(x, y).offset) > self.half_width:
                raise InvalidScenarioError(f"Agent of scenario '{self.name}' must spawn on the track with at "
                                           f"least two waypoints, a speed and a size.")


def domain_randomize(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    """
    Draws one concrete scenario from the randomisation ranges: obstacles jittered, friction and drag scaled,
    sensor noise sampled. The result has zero ranges, so randomising it again changes nothing.
    """
    ranges = spec.randomization
    if ranges.is_zero:
        return spec
    rng = np.random.default_rng(seed)
    obstacles = []
    for obstacle in spec.obstacles:
        distance = ranges.obstacle_jitter * math.sqrt(rng.uniform())
        angle = rng.uniform(-math.pi, math.pi)
        obstacles.append(replace(obstacle, x=obstacle.x + distance * math.cos(angle),
                                 y=obstacle.y + distance * math.sin(angle)))
    friction = rng.uniform(*ranges.friction_range(spec.friction))
    drag = rng.uniform(*ranges.drag_range(spec.drag))
    sensor_noise = spec.sensor_noise + ranges.sensor_noise_spread * rng.uniform()
    return replace(spec, obstacles=tuple(obstacles), friction=float(friction), drag=float(drag),
                   sensor_noise=float(sensor_noise), randomization=RandomizationRanges())


def deploy_spec(spec: ScenarioSpec) -> ScenarioSpec:
    """
    Held-out setting at the edge of the training ranges: lowest friction, highest drag, most sensor noise,
    obstacles at their nominal positions.
    """
    ranges = spec.randomization
    return replace(spec, name=f"{spec.name}-deploy", friction=ranges.friction_range(spec.friction)[0],
                   drag=ranges.drag_range(spec.drag)[1], sensor_noise=spec.sensor_noise + ranges.sensor_noise_spread,
                   randomization=RandomizationRanges())


def spec_to_dict(spec: ScenarioSpec) -> Dict[str, Any]:
    return {"schema": SCHEMA, "version": SCHEMA_VERSION, **asdict(spec)}


def spec_from_dict(data: Dict[str, Any]) -> ScenarioSpec:
    if data.get("schema") != SCHEMA:
        raise InvalidScenarioError(f"Not a scenario file, schema is {data.get('schema')!r}.")
    if data.get("version") != SCHEMA_VERSION:
        raise InvalidScenarioError(f"Unsupported scenario version {data.get('version')!r}.")
    try:
        spec = ScenarioSpec(
            name=data["name"],
            segments=tuple(TrackSegment(**segment) for segment in data["segments"]),
            half_width=float(data["half_width"]),
            horizon=int(data["horizon"]),
            goal=float(data["goal"]),
            obstacles=tuple(Obstacle(**obstacle) for obstacle in data.get("obstacles", [])),
            agents=tuple(AgentScript(waypoints=tuple(tuple(point) for point in agent["waypoints"]),
                                     speed=agent["speed"], radius=agent["radius"],
                                     crossing=agent.get("crossing", False))
                         for agent in data.get("agents", [])),
            hazards=tuple(HazardZone(**hazard) for hazard in data.get("hazards", [])),
            friction=float(data.get("friction", 1.0)),
            drag=float(data.get("drag", 0.05)),
            sensor_noise=float(data.get("sensor_noise", 0.0)),
            randomization=RandomizationRanges(**data.get("randomization", {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidScenarioError(f"Malformed scenario entry: {e}") from None
    spec.validate()
    return spec


def save_spec(spec: ScenarioSpec, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as file:
        json.dump(spec_to_dict(spec), file, indent=2)


def load_spec(path: str) -> ScenarioSpec:
    try:
        with open(path) as file:
            data = json.load(file)
    except json.JSONDecodeError as e:
        raise InvalidScenarioError(f"'{path}' is not valid JSON: {e}") from None
    except OSError as e:
        raise InvalidScenarioError(f"Could not read scenario '{path}': {e}") from None
    logger.debug("Loaded scenario '%s' from %s.", data.get("name"), path)
    return spec_from_dict(data)
