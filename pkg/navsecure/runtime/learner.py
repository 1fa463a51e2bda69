"""
Gradient updates of the world model and of the actor-critic.

Each update records its own tape. The world-model tape watches only world-model parameters; the actor-critic
tape watches only actor and critic parameters and sees the world model as constants, so neither update can
move the other's parameters.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from navsecure.agent.actor_critic import Actor, Critic, actor_loss, critic_loss, policy_entropy, \
    trajectory_targets
from navsecure.autodiff.nn import ParameterSet
from navsecure.autodiff.optim import AdamHyper, adam_step, clip_by_global_norm
from navsecure.autodiff.tensor import Tape, add_n, backward
from navsecure.config import RunConfig
from navsecure.exceptions.numerics import DistributionError, DomainError, NonFiniteLossError
from navsecure.replay.buffer import SequenceBatch
from navsecure.world_model.imagination import NoiseStream, imagine
from navsecure.world_model.loss import LossWeights, world_model_loss
from navsecure.world_model.rssm import LatentState, WorldModel

logger = logging.getLogger(__name__)

# Errors that mean an update produced unusable numbers; the update is skipped and counted.
NUMERIC_ERRORS = (NonFiniteLossError, DistributionError, DomainError)


@dataclass
class LearnerState:
    world_model: ParameterSet
    actor: ParameterSet
    critic: ParameterSet

    def as_sets(self) -> Dict[str, ParameterSet]:
        return {"world_model": self.world_model, "actor": self.actor, "critic": self.critic}


def _strip(grads: Dict[str, np.ndarray], prefix: str) -> Dict[str, np.ndarray]:
    return {name[len(prefix):]: grad for name, grad in grads.items() if name.startswith(prefix)}


class Learner:
    """
    Owns the parameters during training. Only one thread may call the update methods.
    """

    def __init__(self, model: WorldModel, actor: Actor, critic: Critic, config: RunConfig, state: LearnerState):
        self.model = model
        self.actor = actor
        self.critic = critic
        self.config = config
        self.state = state
        self.weights = LossWeights.from_config(config.world_model, config.agent)
        self.model_hyper = AdamHyper(lr=config.world_model.model_lr)
        self.actor_hyper = AdamHyper(lr=config.agent.actor_lr)
        self.critic_hyper = AdamHyper(lr=config.agent.critic_lr)

    @classmethod
    def create(cls, model: WorldModel, actor: Actor, critic: Critic, config: RunConfig) -> "Learner":
        """
        Fresh parameters for all three networks, each from its own seed derived from the run seed.
        """
        seeds = np.random.SeedSequence(config.seed).generate_state(3)
        state = LearnerState(model.initialise(int(seeds[0])), actor.initialise(int(seeds[1])),
                             critic.initialise(int(seeds[2])))
        return cls(model, actor, critic, config, state)

    def world_model_update(self, batch: SequenceBatch, noise: NoiseStream) -> Tuple[Dict[str, float], LatentState]:
        """
        One Adam step on the world-model loss.

        :return: The loss terms plus the gradient norm, and the detached posterior states of the batch,
                 flattened, as starting points for imagination.
        :raises NonFiniteLossError: If any loss term isn't finite; the parameters are left unchanged.
        """
        tape = Tape()
        leaves = tape.watch(self.state.world_model.values, prefix="world_model/")
        stoch = self.model.stoch_size
        result = world_model_loss(self.model, leaves, batch, noise.normal(batch.batch_size, batch.length, stoch),
                                  self.weights)
        grads, norm = clip_by_global_norm(_strip(backward(tape, result.loss), "world_model/"),
                                          self.config.world_model.grad_clip)
        if not np.isfinite(norm):
            raise NonFiniteLossError("world_model gradient")
        self.state.world_model = adam_step(self.state.world_model, grads, self.model_hyper)
        terms = dict(result.terms)
        terms["grad_norm"] = norm
        return terms, result.observed.flatten_posteriors().detach()

    def actor_critic_update(self, starts: LatentState, multiplier: float, noise: NoiseStream) -> Dict[str, float]:
        """
        Imagines `horizon` steps from every start with the current actor, then takes one Adam step for the actor
        and one for the critics.

        :param multiplier: Current Lagrange multiplier weighting the cost return in the actor loss.
        :raises NonFiniteLossError: If either loss isn't finite; the parameters are left unchanged.
        """
        agent = self.config.agent
        tape = Tape()
        actor_leaves = tape.watch(self.state.actor.values, prefix="actor/")
        critic_leaves = tape.watch(self.state.critic.values, prefix="critic/")
        trajectory = imagine(self.model, self.state.world_model.constants(), starts,
                             self.actor.bind(actor_leaves), agent.horizon, noise)
        targets = trajectory_targets(trajectory, self.critic, critic_leaves, agent.discount, agent.return_lambda)
        policy = actor_loss(trajectory, targets.returns, targets.values, targets.cost_returns,
                            agent.entropy_scale, multiplier)
        value = critic_loss(self.critic, critic_leaves, trajectory, targets.returns, targets.cost_returns)
        grads = backward(tape, add_n([policy, value]))

        clip = self.config.world_model.grad_clip
        actor_grads, actor_norm = clip_by_global_norm(_strip(grads, "actor/"), clip)
        critic_grads, critic_norm = clip_by_global_norm(_strip(grads, "critic/"), clip)
        if not (np.isfinite(actor_norm) and np.isfinite(critic_norm)):
            raise NonFiniteLossError("actor_critic gradient")
        self.state.actor = adam_step(self.state.actor, actor_grads, self.actor_hyper)
        self.state.critic = adam_step(self.state.critic, critic_grads, self.critic_hyper)
        return {
            "actor_loss": policy.item(),
            "critic_loss": value.item(),
            "imagined_return": float(np.mean(targets.returns[0].value)),
            "imagined_cost": float(np.mean(targets.cost_returns[0].value)),
            "entropy": policy_entropy(trajectory).item(),
            "actor_grad_norm": actor_norm,
            "critic_grad_norm": critic_norm,
            "multiplier": multiplier,
        }

    def update(self, batch: SequenceBatch, multiplier: float, noise: NoiseStream) -> Dict[str, Dict[str, float]]:
        """
        A world-model update followed by an actor-critic update starting from the batch's posterior states.

        :raises NonFiniteLossError: As soon as either update fails; a failed actor-critic update keeps the
                                    already applied world-model step.
        """
        model_terms, starts = self.world_model_update(batch, noise)
        agent_terms = self.actor_critic_update(starts, multiplier, noise)
        return {"world_model": model_terms, "agent": agent_terms}
