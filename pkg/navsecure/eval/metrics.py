"""
Driving metrics over episode logs: meters per intervention, travel time, success rate and speed spread.
All of them are invariant to the order of the episodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from navsecure.eval.logs import EpisodeLog
from navsecure.exceptions.data import EmptyLogsError


@dataclass(frozen=True)
class MetersPerIntervention:
    meters: float
    lower_bound: bool
    """No intervention happened, so the total distance only bounds the true value from below."""


@dataclass(frozen=True)
class TravelTime:
    seconds: Optional[float]
    """Mean completion time, None when no episode reached the goal."""
    completed: int
    dnf: int
    """Episodes that did not finish."""
    reason: str = ""


def _require(logs: Sequence[EpisodeLog], metric: str) -> None:
    if len(logs) == 0:
        raise EmptyLogsError(f"{metric} needs at least one episode log.")


def compute_mpi(logs: Sequence[EpisodeLog]) -> MetersPerIntervention:
    """
    Total distance over all episodes divided by the total number of interventions.
    """
    _require(logs, "MPI")
    distance = math.fsum(log.total_distance for log in logs)
    interventions = sum(log.interventions for log in logs)
    if interventions == 0:
        return MetersPerIntervention(distance, True)
    return MetersPerIntervention(distance / interventions, False)


def compute_tt(logs: Sequence[EpisodeLog]) -> TravelTime:
    """
    Mean duration of the episodes that reached the goal.
    """
    _require(logs, "TT")
    durations = [log.duration for log in logs if log.completed]
    dnf = len(logs) - len(durations)
    if not durations:
        return TravelTime(None, 0, dnf, "no episode reached the goal")
    return TravelTime(math.fsum(durations) / len(durations), len(durations), dnf)


def compute_sr(logs: Sequence[EpisodeLog]) -> float:
    """
    Percentage of episodes that reached the goal without a single intervention.
    """
    _require(logs, "SR")
    clean = sum(1 for log in logs if log.completed and log.interventions == 0)
    return 100.0 * clean / len(logs)


def compute_sr_distance(logs: Sequence[EpisodeLog]) -> float:
    """
    Percentage of the total distance driven before each episode's first intervention.
    """
    _require(logs, "SR")
    total = math.fsum(log.total_distance for log in logs)
    if total == 0.0:
        return 100.0
    clean = 0.0
    for log in logs:
        for step in log.steps:
            clean += step.distance
            if step.intervened:
                break
    return 100.0 * clean / total


def compute_std_v(logs: Sequence[EpisodeLog]) -> float:
    """
    Population standard deviation of every recorded speed, pooled across episodes.
    """
    speeds = np.array([step.speed for log in logs for step in log.steps])
    if speeds.size < 2:
        raise EmptyLogsError(f"Speed deviation needs at least 2 speed samples, got {speeds.size}.")
    return float(np.std(speeds))
