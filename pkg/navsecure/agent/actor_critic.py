"""
Actor and critics trained on imagined trajectories.

The actor outputs a diagonal Gaussian whose samples are squashed by tanh into [-1, 1]^2. Its loss is
back-propagated through the imagined dynamics (pathwise gradient); the critics regress TD(lambda) targets
of reward and cost.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple, Union

import numpy as np

from navsecure.autodiff.distributions import DiagonalGaussian, gaussian_entropy
from navsecure.autodiff.nn import MLP, ParameterSet, Params
from navsecure.autodiff.tensor import Tensor, add_n, as_tensor, reshape, square, stack, stop_gradient, tanh
from navsecure.config import AgentConfig
from navsecure.exceptions.numerics import NonFiniteLossError, ShapeError
from navsecure.world_model.imagination import ImaginedTrajectory
from navsecure.world_model.rssm import LatentState

ACTION_SIZE = 2

Series = Sequence[Union[Tensor, np.ndarray]]


class ActMode(enum.Enum):
    EXPLORE = "explore"
    GREEDY = "greedy"


class Actor:
    def __init__(self, feature_size: int, config: AgentConfig, action_size: int = ACTION_SIZE):
        self.feature_size = feature_size
        self.action_size = action_size
        self.network = MLP("actor", feature_size, [config.agent_units, config.agent_units], 2 * action_size)

    def initialise(self, seed: int) -> ParameterSet:
        params = ParameterSet()
        self.network.initialise(params, np.random.default_rng(seed))
        return params

    def distribution(self, params: Params, state: LatentState) -> DiagonalGaussian:
        """
        The pre-squash Gaussian over actions.
        """
        out = self.network(params, state.features)
        return DiagonalGaussian.from_raw(out[:, :self.action_size], out[:, self.action_size:])

    def act(self, params: Params, state: LatentState, mode: ActMode, noise=None) -> Tensor:
        """
        :param mode: EXPLORE samples through tanh with the given noise; GREEDY returns tanh(mean).
        :param noise: Standard normal noise of shape (batch, 2), required when exploring.
        """
        dist = self.distribution(params, state)
        if mode is ActMode.GREEDY:
            return tanh(dist.mean)
        if noise is None:
            raise ShapeError("Exploration needs a noise input.")
        noise = as_tensor(noise)
        if noise.shape != dist.shape:
            raise ShapeError(f"Noise of shape {noise.shape} doesn't match actions of shape {dist.shape}.")
        return tanh(dist.mean + dist.std * noise)

    def bind(self, params: Params) -> "BoundPolicy":
        return BoundPolicy(self, params)


class BoundPolicy:
    """
    Actor with fixed parameters, in the form imagination expects.
    """

    def __init__(self, actor: Actor, params: Params):
        self.actor = actor
        self.params = params
        self.action_size = actor.action_size

    def __call__(self, state: LatentState, noise: np.ndarray) -> Tuple[Tensor, DiagonalGaussian]:
        dist = self.actor.distribution(self.params, state)
        return tanh(dist.mean + dist.std * as_tensor(noise)), dist


class Critic:
    """
    Reward value V and cost value V_c, two independent networks sharing one parameter set.
    """

    def __init__(self, feature_size: int, config: AgentConfig):
        units = [config.agent_units, config.agent_units]
        self.value_head = MLP("value", feature_size, units, 1)
        self.cost_value_head = MLP("cost_value", feature_size, units, 1)

    def initialise(self, seed: int) -> ParameterSet:
        rng = np.random.default_rng(seed)
        params = ParameterSet()
        self.value_head.initialise(params, rng)
        self.cost_value_head.initialise(params, rng)
        return params

    def value(self, params: Params, state: LatentState) -> Tensor:
        return reshape(self.value_head(params, state.features), (state.batch_size,))

    def cost_value(self, params: Params, state: LatentState) -> Tensor:
        return reshape(self.cost_value_head(params, state.features), (state.batch_size,))


def lambda_returns(rewards: Series, continuations: Series, next_values: Series, discount: float,
                   return_lambda: float) -> List[Tensor]:
    """
    TD(lambda) targets, computed backwards from the horizon:

        R_t = r_t + discount * c_t * ((1 - lambda) * V(s_{t+1}) + lambda * R_{t+1}),  R_H = V(s_H)

    :param rewards: r_t for t < H.
    :param continuations: Probability c_t that the episode continues after step t.
    :param next_values: V(s_{t+1}) for t < H; the last entry bootstraps the horizon.
    :return: R_t for t < H.
    """
    if not (len(rewards) == len(continuations) == len(next_values)) or len(rewards) == 0:
        raise ShapeError(f"Return inputs must be equally long and non-empty, got {len(rewards)} rewards, "
                         f"{len(continuations)} continuations and {len(next_values)} values.")
    returns: List[Tensor] = []
    last = as_tensor(next_values[-1])
    for t in reversed(range(len(rewards))):
        blended = (1.0 - return_lambda) * as_tensor(next_values[t]) + return_lambda * last
        last = as_tensor(rewards[t]) + discount * as_tensor(continuations[t]) * blended
        returns.append(last)
    return returns[::-1]


@dataclass
class TrajectoryTargets:
    returns: List[Tensor]
    """Reward TD(lambda) targets per imagined step; differentiable w.r.t. the actor."""
    cost_returns: List[Tensor]
    """Cost TD(lambda) targets per imagined step; differentiable w.r.t. the actor."""
    values: List[Tensor]
    """V(s_t) for t < H, used as the baseline."""


def trajectory_targets(trajectory: ImaginedTrajectory, critic: Critic, critic_params: Params, discount: float,
                       return_lambda: float) -> TrajectoryTargets:
    """
    Evaluates the critics on the trajectory with frozen critic parameters, so the targets carry gradient to
    the actor only.
    """
    frozen: Mapping[str, Tensor] = {name: stop_gradient(value) for name, value in critic_params.items()}
    values = [critic.value(frozen, state) for state in trajectory.states]
    cost_values = [critic.cost_value(frozen, state) for state in trajectory.states]
    returns = lambda_returns(trajectory.rewards, trajectory.continuations, values[1:], discount, return_lambda)
    cost_returns = lambda_returns(trajectory.costs, trajectory.continuations, cost_values[1:], discount,
                                  return_lambda)
    return TrajectoryTargets(returns, cost_returns, values[:-1])


def policy_entropy(trajectory: ImaginedTrajectory) -> Tensor:
    """
    Mean entropy of the pre-squash action distributions over batch and steps.
    """
    return stack([gaussian_entropy(dist, axis=-1) for dist in trajectory.policy_dists]).mean()


def actor_loss(trajectory: ImaginedTrajectory, returns: Sequence[Tensor], values: Sequence[Tensor],
               cost_returns: Sequence[Tensor], entropy_scale: float, multiplier: float) -> Tensor:
    """
    -mean(R_t - sg(V(s_t))) + multiplier * mean(C_t) - entropy_scale * H(pi)

    :raises NonFiniteLossError: If the loss isn't finite.
    """
    advantage = stack([r - stop_gradient(v) for r, v in zip(returns, values)]).mean()
    penalty = stack(list(cost_returns)).mean()
    loss = -advantage + multiplier * penalty - entropy_scale * policy_entropy(trajectory)
    if not np.isfinite(loss.item()):
        raise NonFiniteLossError("actor")
    return loss


def critic_loss(critic: Critic, critic_params: Params, trajectory: ImaginedTrajectory,
                returns: Sequence[Tensor], cost_returns: Sequence[Tensor]) -> Tensor:
    """
    mean((V(s_t) - sg(R_t))^2) + mean((V_c(s_t) - sg(C_t))^2), with the states detached.

    :raises NonFiniteLossError: If the loss isn't finite.
    """
    value_errors, cost_errors = [], []
    for state, target, cost_target in zip(trajectory.states, returns, cost_returns):
        state = state.detach()
        value_errors.append(square(critic.value(critic_params, state) - stop_gradient(target)))
        cost_errors.append(square(critic.cost_value(critic_params, state) - stop_gradient(cost_target)))
    loss = add_n([stack(value_errors).mean(), stack(cost_errors).mean()])
    if not np.isfinite(loss.item()):
        raise NonFiniteLossError("critic")
    return loss
