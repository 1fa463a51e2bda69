"""
Small finite constrained MDPs with exact policy evaluation, used to verify the constraint machinery.

Two solvers are provided: enumeration of every deterministic policy, and a Lagrangian sweep that solves the
penalised problem r - lambda * c for a grid of multipliers and keeps the best feasible policy, followed by a
feasible coordinate-ascent polish.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from navsecure.exceptions.numerics import DistributionError, InfeasibleProblemError, ShapeError

logger = logging.getLogger(__name__)

FEASIBILITY_TOLERANCE = 1e-12
ENUMERATION_LIMITS = (6, 4)


@dataclass(frozen=True)
class TabularCMDP:
    transitions: np.ndarray
    """P[s, a, s'], every row sums to 1."""
    rewards: np.ndarray
    """r[s, a]."""
    costs: np.ndarray
    """c[s, a]."""
    discount: float
    budget: float
    """Bound on the expected discounted cost from the initial distribution."""
    initial: Optional[np.ndarray] = None
    """Initial state distribution; uniform when omitted."""

    def __post_init__(self):
        states, actions = self.rewards.shape
        if self.transitions.shape != (states, actions, states) or self.costs.shape != (states, actions):
            raise ShapeError(f"Inconsistent table shapes: P {self.transitions.shape}, r {self.rewards.shape}, "
                             f"c {self.costs.shape}.")
        if not np.allclose(self.transitions.sum(axis=-1), 1.0, atol=1e-10) or np.any(self.transitions < 0):
            raise DistributionError("Transition rows must be probability distributions.")
        tables = (self.transitions, self.rewards, self.costs)
        if not all(np.all(np.isfinite(table)) for table in tables):
            raise DistributionError("Transition, reward and cost tables must be finite.")
        if not 0.0 <= self.discount < 1.0:
            raise DistributionError(f"Discount must lie in [0, 1), got {self.discount}.")
        if self.initial is None:
            object.__setattr__(self, "initial", np.full(states, 1.0 / states))

    @property
    def state_count(self) -> int:
        return self.rewards.shape[0]

    @property
    def action_count(self) -> int:
        return self.rewards.shape[1]


@dataclass(frozen=True)
class PolicyValue:
    reward_return: float
    """Expected discounted reward from the initial distribution."""
    cost_return: float
    values: np.ndarray
    cost_values: np.ndarray


@dataclass(frozen=True)
class TabularSolution:
    reward_return: float
    cost_return: float
    policy: np.ndarray
    """Action index per state."""


def as_stochastic(problem: TabularCMDP, policy: np.ndarray) -> np.ndarray:
    """
    Turns an action-per-state vector into a one-hot policy matrix; matrices pass through.
    """
    policy = np.asarray(policy)
    if policy.ndim == 1:
        return np.eye(problem.action_count)[policy.astype(int)]
    if policy.shape != problem.rewards.shape:
        raise ShapeError(f"Policy of shape {policy.shape} doesn't fit a problem of shape {problem.rewards.shape}.")
    return policy.astype(np.float64)


def evaluate_policy(problem: TabularCMDP, policy: np.ndarray) -> PolicyValue:
    """
    Exact discounted reward and cost values by solving (I - discount * P_pi) V = r_pi.
    """
    pi = as_stochastic(problem, policy)
    transition = np.einsum("sa,sat->st", pi, problem.transitions)
    system = np.eye(problem.state_count) - problem.discount * transition
    values = np.linalg.solve(system, np.sum(pi * problem.rewards, axis=1))
    cost_values = np.linalg.solve(system, np.sum(pi * problem.costs, axis=1))
    return PolicyValue(float(problem.initial @ values), float(problem.initial @ cost_values), values, cost_values)


def action_values(problem: TabularCMDP, table: np.ndarray, values: np.ndarray) -> np.ndarray:
    return table + problem.discount * problem.transitions @ values


def greedy_policy(problem: TabularCMDP, table: np.ndarray) -> np.ndarray:
    """
    Optimal deterministic policy for the per-step payoff `table` by policy iteration. Ties go to the lowest
    action index.
    """
    policy = np.zeros(problem.state_count, dtype=int)
    for _ in range(1000):
        pi = np.eye(problem.action_count)[policy]
        transition = np.einsum("sa,sat->st", pi, problem.transitions)
        values = np.linalg.solve(np.eye(problem.state_count) - problem.discount * transition,
                                 np.sum(pi * table, axis=1))
        q = action_values(problem, table, values)
        current = q[np.arange(problem.state_count), policy]
        improved = np.where(q.max(axis=1) > current + 1e-12, q.argmax(axis=1), policy)
        if np.array_equal(improved, policy):
            return policy
        policy = improved
    logger.warning("Policy iteration did not converge within 1000 sweeps.")
    return policy


def _feasible(value: PolicyValue, problem: TabularCMDP) -> bool:
    return value.cost_return <= problem.budget + FEASIBILITY_TOLERANCE


def solve_by_enumeration(problem: TabularCMDP) -> TabularSolution:
    """
    Best deterministic policy among those within budget, by trying all of them.

    :raises InfeasibleProblemError: If no deterministic policy is within budget.
    """
    best: Optional[TabularSolution] = None
    for choice in itertools.product(range(problem.action_count), repeat=problem.state_count):
        policy = np.array(choice)
        value = evaluate_policy(problem, policy)
        if _feasible(value, problem) and (best is None or value.reward_return > best.reward_return):
            best = TabularSolution(value.reward_return, value.cost_return, policy)
    if best is None:
        raise InfeasibleProblemError(f"No deterministic policy keeps the discounted cost within {problem.budget}.")
    return best


def solve_by_lagrangian_sweep(problem: TabularCMDP, grid_resolution: int = 50) -> TabularSolution:
    """
    Solves r - lambda * c exactly for lambda in {0} and a geometric grid, keeps the best feasible result and
    polishes it by single-state changes that stay feasible and raise the return.

    :raises InfeasibleProblemError: If no multiplier on the grid yields a feasible policy.
    """
    multipliers = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, grid_resolution)])
    best: Optional[TabularSolution] = None
    for multiplier in multipliers:
        policy = greedy_policy(problem, problem.rewards - multiplier * problem.costs)
        value = evaluate_policy(problem, policy)
        if _feasible(value, problem) and (best is None or value.reward_return > best.reward_return):
            best = TabularSolution(value.reward_return, value.cost_return, policy)
    if best is None:
        raise InfeasibleProblemError(f"No multiplier up to {multipliers[-1]:g} yields a policy within "
                                     f"budget {problem.budget}.")

    improved = True
    while improved:
        improved = False
        for state, action in itertools.product(range(problem.state_count), range(problem.action_count)):
            if best.policy[state] == action:
                continue
            candidate = best.policy.copy()
            candidate[state] = action
            value = evaluate_policy(problem, candidate)
            if _feasible(value, problem) and value.reward_return > best.reward_return + 1e-12:
                best = TabularSolution(value.reward_return, value.cost_return, candidate)
                improved = True
    return best


def solve_tabular_cmdp(problem: TabularCMDP, grid_resolution: int = 50) -> TabularSolution:
    """
    Enumerates when the problem is small enough, otherwise falls back to the Lagrangian sweep.
    """
    max_states, max_actions = ENUMERATION_LIMITS
    if problem.state_count <= max_states and problem.action_count <= max_actions:
        return solve_by_enumeration(problem)
    return solve_by_lagrangian_sweep(problem, grid_resolution)


def random_feasible_cmdp(rng: np.random.Generator, states: int = 5, actions: int = 3, discount: float = 0.9,
                         tightness: float = 0.5) -> TabularCMDP:
    """
    Random instance whose budget lies between the cheapest achievable discounted cost and the cost of the
    unconstrained optimum, so it is feasible and usually binding.

    :param tightness: 0 puts the budget at the cheapest cost, 1 at the unconstrained optimum's cost.
    """
    transitions = rng.dirichlet(np.ones(states), size=(states, actions))
    rewards = rng.uniform(0.0, 1.0, size=(states, actions))
    costs = (rng.uniform(size=(states, actions)) < 0.5).astype(np.float64)
    unconstrained = TabularCMDP(transitions, rewards, costs, discount, budget=np.inf)
    cheapest = evaluate_policy(unconstrained, greedy_policy(unconstrained, -costs)).cost_return
    greedy_cost = evaluate_policy(unconstrained, greedy_policy(unconstrained, rewards)).cost_return
    budget = cheapest + tightness * max(greedy_cost - cheapest, 0.0)
    return TabularCMDP(transitions, rewards, costs, discount, budget)


def softmax_policy(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def policy_gradient(problem: TabularCMDP, logits: np.ndarray) -> np.ndarray:
    """
    Exact gradient of the expected discounted reward w.r.t. softmax logits:
    d(s) * pi(a|s) * (Q(s, a) - V(s)), with d the discounted state occupancy.
    """
    pi = softmax_policy(logits)
    value = evaluate_policy(problem, pi)
    transition = np.einsum("sa,sat->st", pi, problem.transitions)
    occupancy = np.linalg.solve((np.eye(problem.state_count) - problem.discount * transition).T, problem.initial)
    advantages = action_values(problem, problem.rewards, value.values) - value.values[:, None]
    return occupancy[:, None] * pi * advantages


def score_function_gradient(problem: TabularCMDP, logits: np.ndarray, episodes: int, horizon: int,
                            rng: np.random.Generator) -> np.ndarray:
    """
    Monte Carlo (REINFORCE) estimate of :func:`policy_gradient`:
    mean over episodes of sum_t discount^t * G_t * grad log pi(a_t | s_t), truncated at the horizon.
    """
    pi = softmax_policy(logits)
    gradient = np.zeros_like(pi)
    for _ in range(episodes):
        state = rng.choice(problem.state_count, p=problem.initial)
        steps = []
        for _ in range(horizon):
            action = rng.choice(problem.action_count, p=pi[state])
            steps.append((state, action, problem.rewards[state, action]))
            state = rng.choice(problem.state_count, p=problem.transitions[state, action])
        future = 0.0
        for t in reversed(range(horizon)):
            state, action, reward = steps[t]
            future = reward + problem.discount * future
            score = -pi[state].copy()
            score[action] += 1.0
            gradient[state] += problem.discount ** t * future * score
    return gradient / episodes
