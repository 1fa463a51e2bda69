"""
Latent rollouts that never touch the environment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Mapping, Protocol, Tuple

import numpy as np

from navsecure.autodiff.distributions import DiagonalGaussian
from navsecure.autodiff.nn import Params
from navsecure.autodiff.tensor import Tensor, stop_gradient
from navsecure.exceptions.numerics import ShapeError
from navsecure.world_model.rssm import LatentState, WorldModel


class NoiseStream:
    """
    Seeded source of the standard normal noise every stochastic operation takes as an input.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def normal(self, *shape: int) -> np.ndarray:
        return self._rng.standard_normal(shape)


class Policy(Protocol):
    action_size: int

    def __call__(self, state: LatentState, noise: np.ndarray) -> Tuple[Tensor, DiagonalGaussian]:
        """
        :return: The reparameterised action and the distribution it was drawn from.
        """
        ...


@dataclass
class ImaginedTrajectory:
    """
    states[0] is the start; states[k + 1] is reached by taking actions[k] from states[k], and the reward,
    cost probability and continuation probability at index k are predicted from states[k + 1].
    """
    states: List[LatentState] = field(default_factory=list)
    actions: List[Tensor] = field(default_factory=list)
    policy_dists: List[DiagonalGaussian] = field(default_factory=list)
    rewards: List[Tensor] = field(default_factory=list)
    costs: List[Tensor] = field(default_factory=list)
    continuations: List[Tensor] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.actions)


def imagine(model: WorldModel, params: Params, starts: LatentState, policy: Policy, horizon: int,
            noise: NoiseStream) -> ImaginedTrajectory:
    """
    Rolls the prior forward for `horizon` steps from detached starting states, choosing actions with the
    policy. World-model parameters pass through stop_gradient, so only the policy receives gradient from
    anything computed on the trajectory.
    """
    if horizon < 1:
        raise ShapeError(f"Imagination needs a horizon of at least 1, got {horizon}.")
    frozen: Mapping[str, Tensor] = {name: stop_gradient(value) for name, value in params.items()}
    state = starts.detach()
    trajectory = ImaginedTrajectory(states=[state])
    for _ in range(horizon):
        action, dist = policy(state, noise.normal(state.batch_size, policy.action_size))
        state = model.prior_step(frozen, state, action, noise.normal(state.batch_size, model.stoch_size))
        trajectory.actions.append(action)
        trajectory.policy_dists.append(dist)
        trajectory.states.append(state)
        trajectory.rewards.append(model.predict_reward(frozen, state).mean)
        trajectory.costs.append(model.predict_cost(frozen, state))
        trajectory.continuations.append(model.predict_continuation(frozen, state))
    return trajectory
