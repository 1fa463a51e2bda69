"""
The cost constraint: a budget on expected discounted episode cost, enforced by dual ascent on one
Lagrange multiplier.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, replace
from typing import Deque, Iterable, Sequence, Tuple

import numpy as np

from navsecure.config import AgentConfig
from navsecure.exceptions.configuration import ConfigError
from navsecure.exceptions.data import EmptyLogsError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SafetyBudget:
    budget: float = 0.1
    """Maximum allowed expected discounted cost per episode."""
    multiplier: float = 0.0
    """Lagrange multiplier, never negative."""
    learning_rate: float = 0.05

    def __post_init__(self):
        if self.budget < 0 or self.multiplier < 0 or self.learning_rate < 0:
            raise ConfigError(f"Budget, multiplier and learning rate must be non-negative, got {self}.")

    @classmethod
    def from_config(cls, config: AgentConfig) -> "SafetyBudget":
        return cls(budget=config.budget, multiplier=config.multiplier_init, learning_rate=config.multiplier_lr)


def update_multiplier(observed_cost_return: float, budget: SafetyBudget) -> SafetyBudget:
    """
    multiplier <- max(0, multiplier + lr * (observed - budget))
    """
    multiplier = max(0.0, budget.multiplier + budget.learning_rate * (observed_cost_return - budget.budget))
    return replace(budget, multiplier=multiplier)


def discounted_sum(values: Iterable[float], discount: float) -> float:
    total, weight = 0.0, 1.0
    for value in values:
        total += weight * value
        weight *= discount
    return total


def is_feasible(episode_costs: Sequence[Sequence[float]], budget: SafetyBudget,
                discount: float) -> Tuple[bool, float]:
    """
    Checks whether the mean discounted episode cost stays within the budget (the boundary counts as feasible).

    :param episode_costs: Per-step costs of every evaluation episode.
    :return: (feasible, margin) with margin = budget - mean discounted cost.
    :raises EmptyLogsError: If no episode is given.
    """
    if len(episode_costs) == 0:
        raise EmptyLogsError("Feasibility needs at least one evaluation episode.")
    mean_cost = float(np.mean([discounted_sum(costs, discount) for costs in episode_costs]))
    margin = budget.budget - mean_cost
    return mean_cost <= budget.budget, margin


class MultiplierSchedule:
    """
    Updates the multiplier after every finished training episode from the mean discounted cost of the most
    recent episodes. A frozen schedule keeps the multiplier at zero.
    """

    def __init__(self, budget: SafetyBudget, window: int, frozen: bool = False):
        self.budget = replace(budget, multiplier=0.0) if frozen else budget
        self.frozen = frozen
        self._recent: Deque[float] = deque(maxlen=window)

    @property
    def multiplier(self) -> float:
        return self.budget.multiplier

    def episode_finished(self, discounted_cost: float) -> SafetyBudget:
        self._recent.append(discounted_cost)
        if self.frozen:
            return self.budget
        observed = float(np.mean(self._recent))
        self.budget = update_multiplier(observed, self.budget)
        logger.debug("Multiplier %.4f after mean discounted cost %.4f (budget %.4f).",
                     self.budget.multiplier, observed, self.budget.budget)
        return self.budget
