from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Dict

import numpy as np

from navsecure.autodiff.distributions import (
    bernoulli_log_prob,
    kl_diag_gaussian,
    unit_gaussian_log_prob,
)
from navsecure.autodiff.nn import Params
from navsecure.autodiff.tensor import Tensor, add_n, maximum
from navsecure.config import AgentConfig, WorldModelConfig
from navsecure.exceptions.configuration import ConfigError
from navsecure.exceptions.numerics import NonFiniteLossError
from navsecure.replay.buffer import SequenceBatch
from navsecure.world_model.rssm import ObservedSequence, WorldModel


@dataclass(frozen=True)
class LossWeights:
    kl_prior: float = 0.8
    """Weight of KL(sg(posterior) || prior)."""
    kl_posterior: float = 0.2
    """Weight of KL(posterior || sg(prior))."""
    observation: float = 1.0
    reward: float = 1.0
    cost: float = 1.0
    entropy: float = 3e-4
    """Policy entropy bonus, used by the actor objective."""
    free_nats: float = 1.0

    def __post_init__(self):
        for weight in fields(self):
            if getattr(self, weight.name) < 0:
                raise ConfigError(f"Loss weight '{weight.name}' can't be negative.")

    @classmethod
    def from_config(cls, model: WorldModelConfig, agent: AgentConfig) -> "LossWeights":
        return cls(kl_prior=model.kl_prior_scale, kl_posterior=model.kl_posterior_scale,
                   observation=model.observation_scale, reward=model.reward_scale, cost=model.cost_scale,
                   entropy=agent.entropy_scale, free_nats=model.free_nats)


@dataclass(frozen=True)
class WorldModelLoss:
    loss: Tensor
    terms: Dict[str, float]
    """Unweighted terms summed over time and averaged over the batch; likelihood terms are log-probabilities."""
    observed: ObservedSequence
    """Posterior states of the batch; the starting points of imagination."""


def world_model_loss(model: WorldModel, params: Params, batch: SequenceBatch, noise: np.ndarray,
                     weights: LossWeights) -> WorldModelLoss:
    """
    Balanced-KL variational loss over a replayed batch:

        kl_prior * max(KL(sg(post) || prior), free_nats) + kl_posterior * max(KL(post || sg(prior)), free_nats)
        - observation * log p(o) - reward * log p(r) - cost * log p(c) - log p(continue)

    per sample and step, summed over time and averaged over the batch.

    :param noise: Standard normal noise of shape (B, T, stoch_size).
    :raises NonFiniteLossError: Naming the first term that isn't finite.
    """
    observed = model.observe(params, batch.observations, batch.actions, noise)
    per_term = {name: [] for name in ("kl_prior", "kl_posterior", "observation", "reward", "cost", "continuation")}
    raw_kl = []
    for t, (posterior, prior) in enumerate(zip(observed.posteriors, observed.priors)):
        trains_prior = kl_diag_gaussian(posterior.z_dist.detach(), prior.z_dist, axis=-1)
        trains_posterior = kl_diag_gaussian(posterior.z_dist, prior.z_dist.detach(), axis=-1)
        raw_kl.append(float(trains_prior.value.sum()))
        per_term["kl_prior"].append(maximum(trains_prior, weights.free_nats).sum())
        per_term["kl_posterior"].append(maximum(trains_posterior, weights.free_nats).sum())
        per_term["observation"].append(
            unit_gaussian_log_prob(model.decode(params, posterior).mean, batch.observations[:, t]))
        per_term["reward"].append(
            unit_gaussian_log_prob(model.predict_reward(params, posterior).mean, batch.rewards[:, t]))
        per_term["cost"].append(bernoulli_log_prob(model.cost_logits(params, posterior), batch.costs[:, t]))
        per_term["continuation"].append(
            bernoulli_log_prob(model.continuation_logits(params, posterior), batch.continuations[:, t]))

    scale = 1.0 / batch.batch_size
    totals = {name: add_n(values) * scale for name, values in per_term.items()}
    coefficients = {"kl_prior": weights.kl_prior, "kl_posterior": weights.kl_posterior,
                    "observation": -weights.observation, "reward": -weights.reward, "cost": -weights.cost,
                    "continuation": -1.0}
    terms: Dict[str, float] = {}
    for name, total in totals.items():
        value = total.item()
        if not math.isfinite(value):
            raise NonFiniteLossError(name)
        terms[name] = value
    terms["kl"] = sum(raw_kl) * scale

    loss = add_n(total * coefficients[name] for name, total in totals.items())
    terms["loss"] = loss.item()
    if not math.isfinite(terms["loss"]):
        raise NonFiniteLossError("loss")
    return WorldModelLoss(loss, terms, observed)
