"""
Per-episode trajectory logs, the input of every metric.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

from navsecure.exceptions.data import InvalidTransitionError
from navsecure.helpers.json_lines import append_json_lines, read_json_lines


@dataclass(frozen=True)
class EpisodeStep:
    time: float
    """Seconds since the episode started, at the end of this step."""
    x: float
    y: float
    """Position the vehicle drove to, before any intervention reset."""
    speed: float
    reward: float
    cost: float
    intervened: bool = False
    distance: float = 0.0
    """Meters driven during this step."""


@dataclass
class EpisodeLog:
    dt: float
    steps: List[EpisodeStep] = field(default_factory=list)
    completed: bool = False
    """Whether the goal was reached."""
    collisions: int = 0
    scenario: str = ""
    seed: int = 0

    @property
    def total_distance(self) -> float:
        return math.fsum(step.distance for step in self.steps)

    @property
    def interventions(self) -> int:
        return sum(1 for step in self.steps if step.intervened)

    @property
    def duration(self) -> float:
        return self.steps[-1].time if self.steps else 0.0

    @property
    def total_return(self) -> float:
        return math.fsum(step.reward for step in self.steps)

    def discounted_cost(self, discount: float) -> float:
        return math.fsum(discount ** k * step.cost for k, step in enumerate(self.steps))

    def validate(self) -> None:
        """
        :raises InvalidTransitionError: If times don't advance by exactly dt per step.
        """
        for k, step in enumerate(self.steps):
            if not math.isclose(step.time, (k + 1) * self.dt, rel_tol=0.0, abs_tol=1e-9):
                raise InvalidTransitionError(f"Step {k} of the episode log is at {step.time} s, expected "
                                             f"{(k + 1) * self.dt} s.")
            if step.distance < 0 or step.speed < 0:
                raise InvalidTransitionError(f"Step {k} of the episode log has a negative distance or speed.")


def write_episode_logs(file_location: str, logs: Sequence[EpisodeLog], fingerprint: str = "") -> None:
    """
    One JSON object per step, each tagged with its episode index, plus one summary object per episode.
    """
    records = []
    for index, log in enumerate(logs):
        records.append({"kind": "episode", "episode": index, "dt": log.dt, "completed": log.completed,
                        "collisions": log.collisions, "scenario": log.scenario, "seed": log.seed,
                        "fingerprint": fingerprint})
        records.extend({"kind": "step", "episode": index, **asdict(step)} for step in log.steps)
    append_json_lines(file_location, records)


def read_episode_logs(file_location: str) -> List[EpisodeLog]:
    logs: List[EpisodeLog] = []
    try:
        for record in read_json_lines(file_location):
            if record["kind"] == "episode":
                logs.append(EpisodeLog(dt=record["dt"], completed=record["completed"],
                                       collisions=record["collisions"], scenario=record["scenario"],
                                       seed=record["seed"]))
            else:
                fields = {k: v for k, v in record.items() if k not in ("kind", "episode")}
                logs[-1].steps.append(EpisodeStep(**fields))
    except (KeyError, IndexError, TypeError, json.JSONDecodeError) as e:
        raise InvalidTransitionError(f"Malformed episode log '{file_location}': {e}") from None
    return logs
