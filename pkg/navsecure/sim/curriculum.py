"""
Built-in scenarios and the three-stage curriculum.

Stage 1 drives straight corridors past static obstacles, stage 2 adds curves, stage 3 adds scripted agents
(a slow lead vehicle and a crossing pedestrian).
"""
from __future__ import annotations

import math
from typing import Callable, Dict, List

from navsecure.exceptions.configuration import ConfigError
from navsecure.sim.scenario import AgentScript, HazardZone, Obstacle, RandomizationRanges, ScenarioSpec, load_spec
from navsecure.sim.track import Track, TrackSegment

TRAINING_RANGES = RandomizationRanges(obstacle_jitter=0.5, friction_spread=0.2, drag_spread=0.2,
                                      sensor_noise_spread=0.05)

CURVED_SEGMENTS = (TrackSegment("straight", length=20.0),
                   TrackSegment("arc", radius=25.0, angle=math.pi / 4),
                   TrackSegment("straight", length=15.0),
                   TrackSegment("arc", radius=25.0, angle=-math.pi / 4),
                   TrackSegment("straight", length=20.0))


def _obstacle(track: Track, s: float, lateral: float, radius: float = 0.6) -> Obstacle:
    x, y, _ = track.point_at(s, lateral)
    return Obstacle(x, y, radius)


def _lane_path(track: Track, start: float, end: float, lateral: float, spacing: float = 2.5) -> tuple:
    count = max(1, int(math.ceil((end - start) / spacing)))
    return tuple(track.point_at(start + (end - start) * i / count, lateral)[:2] for i in range(count + 1))


def corridor() -> ScenarioSpec:
    segments = (TrackSegment("straight", length=60.0),)
    track = Track(segments)
    return ScenarioSpec(name="corridor", segments=segments, half_width=3.5, horizon=200, goal=58.0,
                        obstacles=(_obstacle(track, 20.0, 1.5), _obstacle(track, 40.0, -1.5)),
                        randomization=TRAINING_RANGES)


def curve() -> ScenarioSpec:
    track = Track(CURVED_SEGMENTS)
    return ScenarioSpec(name="curve", segments=CURVED_SEGMENTS, half_width=3.5, horizon=250, goal=track.length - 2.0,
                        obstacles=(_obstacle(track, 12.0, 1.5), _obstacle(track, 50.0, -1.5),
                                   _obstacle(track, 80.0, 1.5)),
                        randomization=TRAINING_RANGES)


def traffic() -> ScenarioSpec:
    track = Track(CURVED_SEGMENTS)
    cross_start, cross_end = track.point_at(70.0, -3.0), track.point_at(70.0, 5.0)
    agents = (AgentScript(waypoints=_lane_path(track, 25.0, 55.0, 1.75), speed=2.0, radius=0.8),
              AgentScript(waypoints=(cross_start[:2], cross_end[:2]), speed=1.0, radius=0.4, crossing=True))
    return ScenarioSpec(name="traffic", segments=CURVED_SEGMENTS, half_width=3.5, horizon=300,
                        goal=track.length - 2.0,
                        obstacles=(_obstacle(track, 12.0, 1.5), _obstacle(track, 85.0, -1.5)),
                        agents=agents, randomization=TRAINING_RANGES)


def shortcut() -> ScenarioSpec:
    """
    Straight corridor whose centerline, the fastest line, runs through a hazard zone; going around it
    costs progress and lateral penalty but no cost.
    """
    segments = (TrackSegment("straight", length=60.0),)
    track = Track(segments)
    x, y, _ = track.point_at(30.0)
    return ScenarioSpec(name="shortcut", segments=segments, half_width=4.0, horizon=200, goal=58.0,
                        hazards=(HazardZone(x, y, 2.5),),
                        randomization=RandomizationRanges(friction_spread=0.1, drag_spread=0.1))


CATALOGUE: Dict[str, Callable[[], ScenarioSpec]] = {
    "corridor": corridor,
    "curve": curve,
    "traffic": traffic,
    "shortcut": shortcut,
}

STAGES: Dict[int, List[str]] = {
    1: ["corridor"],
    2: ["curve"],
    3: ["traffic"],
}


def scenario_by_name(name: str) -> ScenarioSpec:
    try:
        return CATALOGUE[name]()
    except KeyError:
        raise ConfigError(f"Unknown scenario '{name}', choose one of {', '.join(CATALOGUE)}."
                          f" Use '--help' for more information.") from None


def curriculum(stage: int) -> List[ScenarioSpec]:
    """
    :raises ConfigError: If the stage isn't 1, 2 or 3.
    """
    if stage not in STAGES:
        raise ConfigError(f"Stage must be 1, 2 or 3, got {stage}. Use '--help' for more information.")
    return [CATALOGUE[name]() for name in STAGES[stage]]


def select_scenarios(stage: int, spec_path: str = "", name: str = "") -> List[ScenarioSpec]:
    """
    Scenarios a command should drive: a spec file wins over a catalogue name, which wins over the stage.

    :raises ConfigError: For an unknown name or stage.
    :raises InvalidScenarioError: If the spec file can't be used.
    """
    if spec_path:
        return [load_spec(spec_path)]
    if name:
        return [scenario_by_name(name)]
    return curriculum(stage)


def describe_stages() -> str:
    """
    The catalogue as printed by 'scenario list', one line per scenario.
    """
    lines = []
    stage_of = {scenario: stage for stage, names in STAGES.items() for scenario in names}
    for name, factory in CATALOGUE.items():
        spec = factory()
        stage = f"stage {stage_of[name]}" if name in stage_of else "extra"
        lines.append(f"{name:<10} {stage:<8} length {spec.track().length:6.1f} m, half-width {spec.half_width:.1f} m, "
                     f"{len(spec.obstacles)} obstacle(s), {len(spec.agents)} agent(s), {len(spec.hazards)} hazard(s)")
    return "\n".join(lines)
