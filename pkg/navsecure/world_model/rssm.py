"""
Recurrent state-space world model.

The latent state is a deterministic recurrent vector h, carried by a GRU, plus a stochastic vector z drawn
from a diagonal Gaussian. With an observation available, z comes from the posterior head (h and the encoded
observation); without one it comes from the prior head (h only), which is what imagination runs on.
Decoder, reward, cost and continuation heads all read the concatenated features (h, z).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from navsecure.autodiff.distributions import DiagonalGaussian
from navsecure.autodiff.nn import GRUCell, Linear, MLP, ParameterSet, Params
from navsecure.autodiff.tensor import Tensor, as_tensor, concat, reshape, sigmoid, stop_gradient, tanh
from navsecure.config import WorldModelConfig
from navsecure.exceptions.numerics import ShapeError

logger = logging.getLogger(__name__)

ACTION_SIZE = 2


@dataclass(frozen=True)
class LatentState:
    h: Tensor
    """Deterministic recurrent state, shape (batch, deter_size)."""
    z: Tensor
    """Stochastic latent sample, shape (batch, stoch_size)."""
    z_dist: DiagonalGaussian
    """Distribution z was sampled from."""

    @property
    def batch_size(self) -> int:
        return self.h.shape[0]

    @property
    def features(self) -> Tensor:
        return concat([self.h, self.z], axis=-1)

    def detach(self) -> "LatentState":
        return LatentState(stop_gradient(self.h), stop_gradient(self.z), self.z_dist.detach())


@dataclass(frozen=True)
class ObservedSequence:
    """
    Result of filtering a B x T batch: one posterior and one prior state per timestep. Both share h;
    the prior z is drawn from the prior with the same noise as the posterior.
    """
    posteriors: List[LatentState]
    priors: List[LatentState]

    @property
    def length(self) -> int:
        return len(self.posteriors)

    def flatten_posteriors(self) -> LatentState:
        """
        Every posterior state stacked into one batch of B*T states, time-major.
        """
        return stack_states(self.posteriors)


class WorldModel:
    """
    Network layout of the world model. Holds no parameters; those live in the ParameterSet returned by
    :meth:`initialise` and are passed to every call, tracked or not.
    """

    def __init__(self, observation_size: int, config: WorldModelConfig, action_size: int = ACTION_SIZE):
        self.observation_size = observation_size
        self.action_size = action_size
        self.config = config
        units = config.model_units
        deter, stoch = config.deter_size, config.stoch_size
        self.encoder = MLP("encoder", observation_size, [units], config.embed_size)
        self.dynamics_input = Linear("dynamics.input", stoch + action_size, units)
        self.cell = GRUCell("dynamics.cell", units, deter)
        self.prior_head = MLP("prior", deter, [units], 2 * stoch)
        self.posterior_head = MLP("posterior", deter + config.embed_size, [units], 2 * stoch)
        self.decoder = MLP("decoder", deter + stoch, [units], observation_size)
        self.reward_head = MLP("reward", deter + stoch, [units], 1)
        self.cost_head = MLP("cost", deter + stoch, [units], 1)
        self.continuation_head = MLP("continuation", deter + stoch, [units], 1)

    @property
    def deter_size(self) -> int:
        return self.config.deter_size

    @property
    def stoch_size(self) -> int:
        return self.config.stoch_size

    @property
    def feature_size(self) -> int:
        return self.config.deter_size + self.config.stoch_size

    @property
    def dimensions(self) -> List[int]:
        """
        (observation, action, deter, stoch) sizes; checkpoints record these so incompatible ones are refused.
        """
        return [self.observation_size, self.action_size, self.deter_size, self.stoch_size]

    def initialise(self, seed: int) -> ParameterSet:
        rng = np.random.default_rng(seed)
        params = ParameterSet()
        for module in (self.encoder, self.dynamics_input, self.cell, self.prior_head, self.posterior_head,
                       self.decoder, self.reward_head, self.cost_head, self.continuation_head):
            module.initialise(params, rng)
        logger.debug("Initialised world model with %d parameters.", params.count())
        return params

    def initial_state(self, batch_size: int) -> LatentState:
        return LatentState(Tensor(np.zeros((batch_size, self.deter_size))),
                           Tensor(np.zeros((batch_size, self.stoch_size))),
                           DiagonalGaussian.standard((batch_size, self.stoch_size)))

    def _check(self, value, size: int, what: str, batch_size: int) -> Tensor:
        value = as_tensor(value)
        if value.shape != (batch_size, size):
            raise ShapeError(f"Expected {what} of shape ({batch_size}, {size}), got {value.shape}.")
        return value

    def _recurrent(self, params: Params, prev: LatentState, prev_action) -> Tensor:
        prev_action = self._check(prev_action, self.action_size, "previous actions", prev.batch_size)
        x = tanh(self.dynamics_input(params, concat([prev.z, prev_action], axis=-1)))
        return self.cell(params, x, prev.h)

    def _latent(self, stats: Tensor, h: Tensor, noise) -> LatentState:
        noise = self._check(noise, self.stoch_size, "noise", h.shape[0])
        dist = DiagonalGaussian.from_raw(stats[:, :self.stoch_size], stats[:, self.stoch_size:])
        return LatentState(h, dist.mean + dist.std * noise, dist)

    def prior_from(self, params: Params, h: Tensor, noise) -> LatentState:
        return self._latent(self.prior_head(params, h), h, noise)

    def posterior_from(self, params: Params, h: Tensor, observation, noise) -> LatentState:
        observation = self._check(observation, self.observation_size, "observations", h.shape[0])
        embed = self.encoder(params, observation)
        return self._latent(self.posterior_head(params, concat([h, embed], axis=-1)), h, noise)

    def prior_step(self, params: Params, prev: LatentState, prev_action, noise) -> LatentState:
        """
        Imagination transition: advances h and draws z from the prior alone.
        """
        return self.prior_from(params, self._recurrent(params, prev, prev_action), noise)

    def posterior_step(self, params: Params, prev: LatentState, prev_action, observation, noise) -> LatentState:
        """
        Filtering transition: advances h from (prev.h, prev.z, prev_action) and draws z from the posterior
        given the observation.

        :param params: World-model parameters, tracked or constant.
        :param prev: State before the transition.
        :param prev_action: Action taken from prev, shape (batch, 2).
        :param observation: Observation reached, shape (batch, observation_size).
        :param noise: Standard normal noise for the reparameterised sample, shape (batch, stoch_size).
        """
        return self.posterior_from(params, self._recurrent(params, prev, prev_action), observation, noise)

    def observe(self, params: Params, observations: np.ndarray, actions: np.ndarray,
                noise: np.ndarray) -> ObservedSequence:
        """
        Filters a batch of sequences from the zero initial state.

        :param observations: Shape (B, T, observation_size).
        :param actions: Action preceding each observation, shape (B, T, 2).
        :param noise: Shape (B, T, stoch_size); the same noise drives the posterior and prior samples.
        """
        observations, actions, noise = (np.asarray(a, dtype=np.float64) for a in (observations, actions, noise))
        if observations.ndim != 3 or actions.shape[:2] != observations.shape[:2] \
                or noise.shape != observations.shape[:2] + (self.stoch_size,):
            raise ShapeError(f"Inconsistent sequence shapes: observations {observations.shape}, "
                             f"actions {actions.shape}, noise {noise.shape}.")
        batch_size, length = observations.shape[:2]
        state = self.initial_state(batch_size)
        posteriors, priors = [], []
        for t in range(length):
            h = self._recurrent(params, state, Tensor(actions[:, t]))
            priors.append(self.prior_from(params, h, noise[:, t]))
            state = self.posterior_from(params, h, observations[:, t], noise[:, t])
            posteriors.append(state)
        return ObservedSequence(posteriors, priors)

    def decode(self, params: Params, state: LatentState) -> DiagonalGaussian:
        """
        Observation distribution: learned mean, unit standard deviation.
        """
        mean = self.decoder(params, state.features)
        return DiagonalGaussian(mean, Tensor(np.ones(mean.shape)))

    def predict_reward(self, params: Params, state: LatentState) -> DiagonalGaussian:
        mean = reshape(self.reward_head(params, state.features), (state.batch_size,))
        return DiagonalGaussian(mean, Tensor(np.ones(mean.shape)))

    def cost_logits(self, params: Params, state: LatentState) -> Tensor:
        return reshape(self.cost_head(params, state.features), (state.batch_size,))

    def predict_cost(self, params: Params, state: LatentState) -> Tensor:
        """
        Probability that the step incurs cost, per batch row.
        """
        return sigmoid(self.cost_logits(params, state))

    def continuation_logits(self, params: Params, state: LatentState) -> Tensor:
        return reshape(self.continuation_head(params, state.features), (state.batch_size,))

    def predict_continuation(self, params: Params, state: LatentState) -> Tensor:
        return sigmoid(self.continuation_logits(params, state))


def stack_states(states: Sequence[LatentState]) -> LatentState:
    """
    Concatenates states along the batch axis.
    """
    return LatentState(concat([s.h for s in states], axis=0), concat([s.z for s in states], axis=0),
                       DiagonalGaussian(concat([s.z_dist.mean for s in states], axis=0),
                                        concat([s.z_dist.std for s in states], axis=0)))
